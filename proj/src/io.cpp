#include "ensweight/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json_report.hpp"

namespace ensweight::io {

namespace {

struct CsvLine {
  int number = 0;
  std::vector<std::string> fields;
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<CsvLine> read_csv(std::istream& in) {
  std::vector<CsvLine> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    CsvLine row;
    row.number = number;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) row.fields.push_back(trim(field));
    if (t.back() == ',') row.fields.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
  std::ostringstream os;
  os << source << ":" << line << ": " << what;
  throw ParseError(os.str());
}

double parse_number(const std::string& text, const std::string& source, int line,
                    std::size_t column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    fail(source, line, "column " + std::to_string(column + 1) + ": '" + text +
                           "' is not a number");
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return in;
}

void require_width(const CsvLine& row, std::size_t width, const std::string& source) {
  if (row.fields.size() != width) {
    fail(source, row.number, "expected " + std::to_string(width) + " fields, found " +
                                 std::to_string(row.fields.size()));
  }
}

int class_index(std::vector<std::string>& names, bool fixed, const std::string& name,
                const std::string& source, int line) {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return static_cast<int>(j);
  }
  if (fixed) fail(source, line, "unknown class '" + name + "'");
  if (name.empty()) fail(source, line, "empty class name");
  names.push_back(name);
  return static_cast<int>(names.size()) - 1;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

AccuracyMatrix parse_accuracy_matrix(std::istream& in, const std::string& source) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw ParseError(source + ": empty accuracy matrix file");
  const CsvLine& header = rows.front();
  if (header.fields.size() < 2) fail(source, header.number, "header needs at least one class");
  std::vector<std::string> classes(header.fields.begin() + 1, header.fields.end());
  std::vector<std::string> classifiers;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size() - 1),
                         static_cast<Eigen::Index>(classes.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require_width(rows[r], header.fields.size(), source);
    classifiers.push_back(rows[r].fields[0]);
    for (std::size_t c = 1; c < rows[r].fields.size(); ++c) {
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
          parse_number(rows[r].fields[c], source, rows[r].number, c);
    }
  }
  if (classifiers.empty()) throw ParseError(source + ": accuracy matrix has no classifier rows");
  return AccuracyMatrix(ClassifierSet(std::move(classifiers)), ClassSet(std::move(classes)),
                        std::move(values));
}

AccuracyMatrix read_accuracy_matrix(const std::string& path) {
  auto in = open_input(path);
  return parse_accuracy_matrix(in, path);
}

void write_accuracy_matrix(std::ostream& out, const AccuracyMatrix& V) {
  out << "classifier";
  for (const auto& name : V.classes().names()) out << ',' << name;
  out << '\n';
  for (int i = 0; i < V.n(); ++i) {
    out << V.classifiers().name(i);
    for (int j = 0; j < V.m(); ++j) out << ',' << format_double(V(i, j));
    out << '\n';
  }
}

void write_weight_matrix(std::ostream& out, const ClassifierSet& classifiers,
                         const ClassSet& classes, const WeightMatrix& W,
                         const SelectionVector& X) {
  if (W.n() != classifiers.size() || W.m() != classes.size() || X.size() != W.n()) {
    throw ShapeError("weight matrix, selection and names disagree in shape");
  }
  out << "classifier";
  for (const auto& name : classes.names()) out << ',' << name;
  out << ",selected\n";
  for (int i = 0; i < W.n(); ++i) {
    out << classifiers.name(i);
    for (int j = 0; j < W.m(); ++j) out << ',' << format_double(W(i, j));
    out << ',' << X[i] << '\n';
  }
}

WeightFile parse_weight_matrix(std::istream& in, const std::string& source) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw ParseError(source + ": empty weight file");
  const CsvLine& header = rows.front();
  if (header.fields.size() < 3 || header.fields.back() != "selected") {
    fail(source, header.number, "header must be classifier,<classes...>,selected");
  }
  std::vector<std::string> classes(header.fields.begin() + 1, header.fields.end() - 1);
  std::vector<std::string> classifiers;
  std::vector<int> flags;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size() - 1),
                         static_cast<Eigen::Index>(classes.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvLine& row = rows[r];
    require_width(row, header.fields.size(), source);
    classifiers.push_back(row.fields[0]);
    for (std::size_t c = 1; c + 1 < row.fields.size(); ++c) {
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
          parse_number(row.fields[c], source, row.number, c);
    }
    const std::string& flag = row.fields.back();
    if (flag == "true") {
      flags.push_back(1);
    } else if (flag == "false") {
      flags.push_back(0);
    } else {
      const double f = parse_number(flag, source, row.number, row.fields.size() - 1);
      if (f != std::floor(f)) fail(source, row.number, "selected flag must be an integer");
      flags.push_back(static_cast<int>(f));
    }
  }
  if (classifiers.empty()) throw ParseError(source + ": weight file has no classifier rows");
  return WeightFile{ClassifierSet(std::move(classifiers)), ClassSet(std::move(classes)),
                    WeightMatrix(std::move(values)), SelectionVector(std::move(flags))};
}

WeightFile read_weight_matrix(const std::string& path) {
  auto in = open_input(path);
  return parse_weight_matrix(in, path);
}

PredictionSet parse_predictions(std::istream& in, const std::string& source,
                                const std::optional<ClassSet>& classes) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw ParseError(source + ": empty predictions file");
  const CsvLine& header = rows.front();
  if (header.fields.size() < 3 || header.fields[0] != "instance_id" ||
      header.fields[1] != "true_class") {
    fail(source, header.number, "header must start with instance_id,true_class");
  }
  const bool fixed = classes.has_value();
  std::vector<std::string> class_names = fixed ? classes->names() : std::vector<std::string>{};
  std::vector<std::string> classifier_names;
  const std::size_t extra = header.fields.size() - 2;
  const bool soft = header.fields[2].find(':') != std::string::npos;

  // For soft files, position of each score column in the n x m block.
  std::vector<std::pair<int, int>> cell(extra);
  if (soft) {
    for (std::size_t c = 0; c < extra; ++c) {
      const std::string& name = header.fields[c + 2];
      const auto colon = name.find(':');
      if (colon == std::string::npos) {
        fail(source, header.number, "column " + std::to_string(c + 3) + " '" + name +
                                        "' is not of the form <classifier>:<class>");
      }
      const std::string clf = name.substr(0, colon);
      int i = -1;
      for (std::size_t k = 0; k < classifier_names.size(); ++k) {
        if (classifier_names[k] == clf) i = static_cast<int>(k);
      }
      if (i < 0) {
        classifier_names.push_back(clf);
        i = static_cast<int>(classifier_names.size()) - 1;
      }
      cell[c] = {i, class_index(class_names, fixed, name.substr(colon + 1), source,
                                header.number)};
    }
    const std::size_t expected = classifier_names.size() * class_names.size();
    if (expected != extra) {
      fail(source, header.number, "expected " + std::to_string(expected) +
                                      " score columns for a full classifier x class grid, found " +
                                      std::to_string(extra));
    }
    for (std::size_t a = 0; a < extra; ++a) {
      for (std::size_t b = a + 1; b < extra; ++b) {
        if (cell[a] == cell[b]) {
          fail(source, header.number, "duplicate score column '" + header.fields[b + 2] + "'");
        }
      }
    }
  } else {
    classifier_names.assign(header.fields.begin() + 2, header.fields.end());
  }

  struct Pending {
    std::string id;
    int truth;
    std::vector<int> votes;
    std::vector<double> values;
  };
  std::vector<Pending> pending;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvLine& row = rows[r];
    require_width(row, header.fields.size(), source);
    Pending p;
    p.id = row.fields[0];
    p.truth = class_index(class_names, fixed, row.fields[1], source, row.number);
    for (std::size_t c = 0; c < extra; ++c) {
      if (soft) {
        p.values.push_back(parse_number(row.fields[c + 2], source, row.number, c + 2));
      } else {
        p.votes.push_back(class_index(class_names, fixed, row.fields[c + 2], source, row.number));
      }
    }
    pending.push_back(std::move(p));
  }

  const auto n = static_cast<Eigen::Index>(classifier_names.size());
  const auto m = static_cast<Eigen::Index>(class_names.size());
  std::vector<PredictionRecord> records;
  records.reserve(pending.size());
  for (auto& p : pending) {
    PredictionRecord rec;
    rec.instance_id = std::move(p.id);
    rec.true_class = p.truth;
    rec.scores = Eigen::MatrixXd::Zero(n, m);
    for (std::size_t c = 0; c < extra; ++c) {
      if (soft) {
        rec.scores(cell[c].first, cell[c].second) = p.values[c];
      } else {
        rec.scores(static_cast<Eigen::Index>(c), p.votes[c]) = 1.0;
      }
    }
    records.push_back(std::move(rec));
  }
  ClassSet class_set = fixed ? *classes : ClassSet(std::move(class_names));
  return PredictionSet(ClassifierSet(std::move(classifier_names)), std::move(class_set),
                       std::move(records));
}

PredictionSet read_predictions(const std::string& path, const std::optional<ClassSet>& classes) {
  auto in = open_input(path);
  return parse_predictions(in, path, classes);
}

void write_predictions(std::ostream& out, const PredictionSet& preds) {
  out << "instance_id,true_class";
  for (const auto& clf : preds.classifiers().names()) {
    for (const auto& cls : preds.classes().names()) out << ',' << clf << ':' << cls;
  }
  out << '\n';
  for (const auto& rec : preds.records()) {
    out << rec.instance_id << ',' << preds.classes().name(rec.true_class);
    for (int i = 0; i < preds.n(); ++i) {
      for (int j = 0; j < preds.m(); ++j) out << ',' << format_double(rec.scores(i, j));
    }
    out << '\n';
  }
}

LabelFile parse_labels(std::istream& in, const std::string& source,
                       const std::optional<ClassSet>& classes) {
  const auto rows = read_csv(in);
  if (rows.empty()) throw ParseError(source + ": empty labels file");
  const CsvLine& header = rows.front();
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    const std::string& name = header.fields[c];
    if (name == "instance_id") id_col = c;
    if (name == "label" || (name == "true_class" && !label_col)) label_col = c;
  }
  if (!label_col) fail(source, header.number, "no 'label' or 'true_class' column");

  const bool fixed = classes.has_value();
  std::vector<std::string> names = fixed ? classes->names() : std::vector<std::string>{};
  LabelFile out{{}, {}, ClassSet({"_"})};
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvLine& row = rows[r];
    require_width(row, header.fields.size(), source);
    out.instance_ids.push_back(id_col ? row.fields[*id_col] : std::to_string(r - 1));
    out.labels.push_back(class_index(names, fixed, row.fields[*label_col], source, row.number));
  }
  if (out.labels.empty()) throw ParseError(source + ": labels file has no rows");
  out.classes = fixed ? *classes : ClassSet(std::move(names));
  return out;
}

LabelFile read_labels(const std::string& path, const std::optional<ClassSet>& classes) {
  auto in = open_input(path);
  return parse_labels(in, path, classes);
}

namespace detail {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json metrics_json(const MetricsReport& report) {
  Json j;
  j["instances"] = report.instances;
  j["balanced_accuracy"] = number(report.balanced_accuracy);
  j["macro_precision"] = number(report.macro_precision);
  j["macro_recall"] = number(report.macro_recall);
  j["macro_f1"] = number(report.macro_f1);
  j["macro_auprc"] = report.macro_auprc ? number(*report.macro_auprc) : Json(nullptr);
  j["ties"] = report.ties;
  Json classes = Json::array();
  for (const auto& c : report.per_class) {
    Json e;
    e["class"] = c.name;
    e["support"] = c.scores.support;
    e["precision"] = number(c.scores.precision);
    e["recall"] = number(c.scores.recall);
    e["f1"] = number(c.scores.f1);
    e["precision_undefined"] = c.scores.precision_undefined;
    e["auprc"] = c.auprc ? number(*c.auprc) : Json(nullptr);
    classes.push_back(std::move(e));
  }
  j["per_class"] = std::move(classes);
  j["warnings"] = report.warnings;
  return j;
}

Json constraints_json(const ConstraintReport& report) {
  Json j;
  j["tolerance"] = report.tolerance;
  j["conformant"] = report.conformant();
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json e;
    e["id"] = c.id;
    e["name"] = c.name;
    e["satisfied"] = c.satisfied;
    e["worst_violation"] = number(c.worst_violation);
    e["location"] = c.location;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  return j;
}

Json objective_json(const ObjectiveBreakdown& objective) {
  Json j;
  j["accuracy_term"] = number(objective.accuracy_term);
  j["l1_term"] = number(objective.l1_term);
  j["l2_term"] = number(objective.l2_term);
  j["total"] = number(objective.total);
  return j;
}

Json params_json(const HyperParams& params) {
  Json j;
  j["K"] = params.K;
  j["lambda"] = params.lambda;
  j["alpha"] = params.alpha;
  j["epsilon"] = params.epsilon;
  j["big_m"] = params.big_m;
  return j;
}

}  // namespace detail

std::string to_json(const MetricsReport& report, int indent) {
  return detail::metrics_json(report).dump(indent);
}

std::string to_json(const ConstraintReport& report, int indent) {
  return detail::constraints_json(report).dump(indent);
}

}  // namespace ensweight::io
