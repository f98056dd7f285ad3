"""Regenerates the synthetic accuracy matrix and prediction fixtures.

Eight simulated classifiers with class-dependent skill vote on five classes.
The accuracy matrix is measured on a validation draw and the predictions
file is an independent test draw.
"""

import csv
import pathlib

import numpy as np

CLASSIFIERS = ["MLR", "J48", "JRIP", "REPTree", "MLP", "SVM", "GNB", "IBk"]
CLASSES = ["N1", "A1", "A2", "A3", "A4"]
COUNTS = [60, 40, 30, 20, 10]
HERE = pathlib.Path(__file__).parent


def draw(rng, skill):
    labels = np.repeat(np.arange(len(CLASSES)), COUNTS)
    n, m = skill.shape
    scores = np.zeros((labels.size, n, m))
    for k, t in enumerate(labels):
        for i in range(n):
            correct = rng.random() < skill[i, t]
            guess = t if correct else rng.choice([j for j in range(m) if j != t])
            p = rng.dirichlet(np.ones(m))
            p[guess] += 2.0
            scores[k, i] = p / p.sum()
    return labels, scores


def main():
    rng = np.random.default_rng(20240607)
    skill = rng.uniform(0.45, 0.95, size=(len(CLASSIFIERS), len(CLASSES)))

    labels, scores = draw(rng, skill)
    predicted = scores.argmax(axis=2)
    with open(HERE / "synthetic_accuracy.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["classifier"] + CLASSES)
        for i, name in enumerate(CLASSIFIERS):
            row = []
            for j in range(len(CLASSES)):
                mask = labels == j
                row.append(f"{(predicted[mask, i] == j).mean():.4f}")
            w.writerow([name] + row)

    labels, scores = draw(rng, skill)
    with open(HERE / "synthetic_predictions.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["instance_id", "true_class"]
                   + [f"{c}:{k}" for c in CLASSIFIERS for k in CLASSES])
        for k, t in enumerate(labels):
            w.writerow([f"t{k:03d}", CLASSES[t]]
                       + [f"{x:.6f}" for x in scores[k].reshape(-1)])


if __name__ == "__main__":
    main()
