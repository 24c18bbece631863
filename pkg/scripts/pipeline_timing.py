"""Wall time of fit + project + biplot + fluctuation at a realistic size."""
import argparse
import time

from expca.scores import biplot_table, fluctuation, project, scale_variable_scores, variable_scores
from expca.synthetic import GroupedConfig, grouped
from expca.workflow import center_for_model, fit_design


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--groups", type=int, default=10)
    ap.add_argument("--replicates", type=int, default=5)
    ap.add_argument("--m", type=int, default=2000)
    args = ap.parse_args()
    s = grouped(GroupedConfig(n_groups=args.groups, replicates=args.replicates, m=args.m))
    t0 = time.perf_counter()
    model = fit_design(s.matrix, s.design)
    z = project(center_for_model(s.matrix, model), model)
    biplot_table(z, scale_variable_scores(variable_scores(model)))
    f = fluctuation(z, s.design)
    print(f"{args.groups}x{args.replicates} observations, {args.m} variables: "
          f"{time.perf_counter() - t0:.3f} s (fluctuation {f:.4f})")


if __name__ == "__main__":
    main()
