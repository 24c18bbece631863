"""Withhold one toxic treatment, fit on the rest, and check where its replicates land."""
import argparse

from expca.axes import TrainingSpec
from expca.scores import classify, project
from expca.synthetic import ToxicologyConfig, toxicology
from expca.workflow import center_for_model, fit_design


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--withhold", default="G3")
    args = ap.parse_args()

    t = toxicology(ToxicologyConfig(snr=args.snr, seed=args.seed))
    d = t.design
    model = fit_design(t.matrix, d, TrainingSpec.excluding(d, [args.withhold]))
    z = project(center_for_model(t.matrix, model), model)
    labels = z.row_labels
    print("group\tsPC1\tsPC2")
    for g in d.groups:
        c = z.scores[d.members(g, labels), :2].mean(axis=0)
        print(f"{g}\t{c[0]:.4f}\t{c[1]:.4f}")
    held = d.members(args.withhold, labels)
    nearest = classify(z, model)
    print(f"\nnearest training unit for {args.withhold} replicates:")
    for i in held:
        print(f"  {labels[i]} -> {nearest[i].nearest_unit}")
    toxic = sum(nearest[i].nearest_unit in ToxicologyConfig.toxic for i in held)
    print(f"{toxic}/{len(held)} assigned to a toxic treatment")


if __name__ == "__main__":
    main()
