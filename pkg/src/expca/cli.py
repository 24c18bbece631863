"""Command-line entry point: ``expca <command> [options]``.

Exit status is 0 on success, 1 on data or model errors and 2 on usage
errors. Every table output starts with comment lines recording the
command line, so repeated invocations give byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import shlex
import sys
import warnings
from pathlib import Path

import numpy as np

from . import data, scores
from .axes import TrainingSpec, atomic_write, load_model, save_model
from .errors import ExpcaError, ParseError, ScoreError
from .stats import anova, enrichment, ward
from .workflow import center_for_model, fit_design


# --- helpers --------------------------------------------------------------

def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _header(ctx, **extra) -> list[str]:
    lines = [f"# command: {ctx.command_line}"]
    lines += [f"# {k}: {v}" for k, v in extra.items()]
    return lines


def _g(x: float) -> str:
    return format(float(x), ".17g")


def parse_axes(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated axis numbers, got {text!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("axes are numbered from 1")
    return a, b


def select_columns(k: int, axes) -> list[int]:
    if axes is None:
        return list(range(k))
    bad = [a for a in axes if a > k]
    if bad:
        raise ScoreError(f"axis {bad[0]} out of range; model has {k} axes")
    return [a - 1 for a in axes]


def format_score_rows(labels, kinds, coords, cols, header, warn=()) -> str:
    out = list(header)
    out += [f"# warning: observation {lab} has m_i = 0" for lab in warn]
    out.append("label\tkind\t" + "\t".join(f"pc{c + 1}" for c in cols))
    for lab, kind, row in zip(labels, kinds, coords):
        out.append(f"{lab}\t{kind}\t" + "\t".join(_g(row[c]) for c in cols))
    return "\n".join(out) + "\n"


def emit_plot_data(score_set: scores.ScoreSet, axes, header) -> str:
    """Label, kind and the requested pair of axes, rows in input order."""
    cols = select_columns(score_set.k, axes)
    return format_score_rows(score_set.row_labels, [score_set.kind] * len(score_set.row_labels),
                             score_set.scores, cols, header, score_set.warnings)


def parse_score_table(text: str) -> scores.ScoreSet:
    """Read observation rows of a score table written by ``project``."""
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not rows or not rows[0].startswith("label\tkind"):
        raise ParseError("score table needs a 'label<TAB>kind<TAB>pc...' header")
    labels, coords = [], []
    for lineno, line in enumerate(rows[1:], start=2):
        cells = line.split("\t")
        if cells[1] != scores.OBSERVATION:
            continue
        try:
            coords.append([float(c) for c in cells[2:]])
        except ValueError:
            raise ParseError(f"score row {lineno}: non-numeric coordinate") from None
        labels.append(cells[0])
    if not labels:
        raise ParseError("score table has no observation rows")
    return scores.ScoreSet(labels, np.array(coords), scores.OBSERVATION, scaled=True)


def read_id_list(path) -> frozenset:
    """Variable IDs, one per line, or the positive rows of an ANOVA table."""
    lines = [ln for ln in _read(path).splitlines() if ln.strip() and not ln.startswith("#")]
    if lines and lines[0].startswith("variable_id\tF"):
        return frozenset(ln.split("\t")[0] for ln in lines[1:] if ln.split("\t")[-1] == "yes")
    return frozenset(ln.split("\t")[0].strip() for ln in lines)


def _design(args, matrix=None) -> data.StudyDesign:
    policy = data.parse_policy(args.reference)
    if getattr(args, "design", None):
        return data.parse_design(_read(args.design), policy, header=args.design_header)
    if matrix is None:
        raise ExpcaError("a design file is required")
    return data.StudyDesign({o: "all" for o in matrix.observation_ids}, policy)


def _load(args, ctx):
    ctx.stage = "load"
    return load_model(args.model)


def _write(args, text: str):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


# --- commands -------------------------------------------------------------

def cmd_fit(args, ctx):
    ctx.stage = "parse"
    matrix = data.parse_matrix(_read(args.matrix))
    design = _design(args)
    ctx.stage = "fit"
    if args.include_group and args.exclude_group:
        raise ExpcaError("use either --include-group or --exclude-group")
    vfilter = read_id_list(args.variables) if args.variables else None
    if args.exclude_group:
        spec = TrainingSpec.excluding(design, args.exclude_group,
                                      raw_groups=tuple(args.raw_group), variable_filter=vfilter)
    else:
        spec = TrainingSpec(tuple(args.include_group), tuple(args.raw_group), vfilter)
    model = fit_design(matrix, design, spec, max_rank=args.max_rank)
    ctx.stage = "save"
    save_model(model, args.out)


def _projected(args, ctx, model):
    ctx.stage = "parse"
    matrix = data.parse_matrix(_read(args.matrix))
    design = _design(args) if args.design else None
    ctx.stage = "project"
    centered = center_for_model(matrix, model, design)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return scores.project(centered, model, scaled=not getattr(args, "unscaled", False))


def cmd_project(args, ctx):
    model = _load(args, ctx)
    z = _projected(args, ctx, model)
    ctx.stage = "output"
    _write(args, emit_plot_data(z, args.axes, _header(ctx, model_sha256=_sha256(args.model),
                                                      scaled="no" if args.unscaled else "yes")))


def cmd_classify(args, ctx):
    model = _load(args, ctx)
    z = _projected(args, ctx, model)
    ctx.stage = "classify"
    results = scores.classify(z, model, args.axes_used)
    out = _header(ctx, model_sha256=_sha256(args.model), axes_used=args.axes_used)
    out.append("observation_id\tnearest_unit\t" + "\t".join(f"d:{u}" for u in model.unit_labels))
    for r in results:
        out.append(f"{r.observation_id}\t{r.nearest_unit}\t"
                   + "\t".join(_g(r.distances[u]) for u in model.unit_labels))
    _write(args, "\n".join(out) + "\n")


def cmd_biplot(args, ctx):
    model = _load(args, ctx)
    if args.matrix:
        obs = _projected(args, ctx, model)
    else:
        obs = scores.training_unit_scores(model)
    ctx.stage = "biplot"
    var = scores.scale_variable_scores(scores.variable_scores(model))
    table = scores.biplot_table(obs, var, args.multiplier)
    cols = select_columns(model.k, args.axes)
    _write(args, format_score_rows(table.labels, table.kinds, table.coords, cols,
                                   _header(ctx, model_sha256=_sha256(args.model),
                                           obs_multiplier=_g(table.obs_multiplier)),
                                   obs.warnings))


def cmd_fluctuation(args, ctx):
    ctx.stage = "parse"
    z = parse_score_table(_read(args.scores))
    design = data.parse_design(_read(args.design), header=args.design_header)
    ctx.stage = "fluctuation"
    value = scores.fluctuation(z, design, args.mode)
    _write(args, "\n".join(_header(ctx, mode=args.mode)) + f"\nfluctuation\t{_g(value)}\n")


def cmd_anova(args, ctx):
    ctx.stage = "parse"
    blocks = anova.parse_probe_table(_read(args.probes))
    design = data.parse_design(_read(args.design), header=args.design_header)
    ctx.stage = "anova"
    records = [anova.two_way_anova(b, design.assignments, args.threshold) for b in blocks]
    _write(args, "\n".join(_header(ctx, threshold=_g(args.threshold))) + "\n" + anova.format_anova(records))


def cmd_enrich(args, ctx):
    ctx.stage = "parse"
    model = _load(args, ctx) if args.model else None
    ctx.stage = "parse"
    universe = model.variable_ids if model is not None else None
    annotations = enrichment.parse_annotations(_read(args.annotations), universe)
    ctx.stage = "select"
    extra = {}
    if args.selected:
        selected = read_id_list(args.selected)
    elif model is not None:
        count = args.top if args.top is not None else (500 if args.direction == "largest" else 100)
        var = scores.scale_variable_scores(scores.variable_scores(model))
        selected = enrichment.select_top(var, args.axis, args.direction, count)
        extra = {"selection": f"{count} {args.direction} on pc{args.axis}"}
    else:
        raise ExpcaError("give --selected, or --model to select top-scoring variables")
    ctx.stage = "enrich"
    size = args.universe_size if args.universe_size is not None else (len(universe) if universe else None)
    table = enrichment.enrich(annotations, size, selected)
    _write(args, "\n".join(_header(ctx, universe_size=size, **extra)) + "\n"
           + enrichment.format_enrichment(table))


def cmd_cluster(args, ctx):
    ctx.stage = "parse"
    matrix = data.parse_matrix(_read(args.matrix))
    design = _design(args, matrix)
    ctx.stage = "cluster"
    design.check_covers(matrix.observation_ids)
    centered = data.center(matrix, data.compute_reference(matrix, design))
    vfilter = read_id_list(args.variables) if args.variables else None
    tree = ward.ward_cluster(centered, vfilter)
    _write(args, "\n".join(_header(ctx)) + "\n" + ward.format_dendrogram(tree))


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="expca", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def design_opts(sp, required=False):
        sp.add_argument("--design", required=required, help="TSV of observation_id, group")
        sp.add_argument("--design-header", action="store_true", help="design file has a header row")

    def reference_opt(sp):
        sp.add_argument("--reference", default="global-mean",
                        help='"global-mean", "control:<group>" or "external:<path>"')

    def out_opt(sp, required=False):
        sp.add_argument("--out", required=required, help="output path (stdout if omitted)")

    sp = sub.add_parser("fit", help="fit axes on a designed training matrix")
    sp.add_argument("--matrix", required=True)
    design_opts(sp, required=True)
    reference_opt(sp)
    sp.add_argument("--include-group", action="append", default=[], metavar="G")
    sp.add_argument("--exclude-group", action="append", default=[], metavar="G")
    sp.add_argument("--raw-group", action="append", default=[], metavar="G",
                    help="use this group's observations instead of its mean")
    sp.add_argument("--variables", help="variable IDs to keep (list or ANOVA table)")
    sp.add_argument("--max-rank", type=int)
    out_opt(sp, required=True)
    sp.set_defaults(func=cmd_fit)

    for name, func, hlp in (("project", cmd_project, "scaled scores for observations"),
                            ("classify", cmd_classify, "nearest training unit per observation")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--model", required=True)
        sp.add_argument("--matrix", required=True)
        design_opts(sp)
        reference_opt(sp)
        if name == "project":
            sp.add_argument("--unscaled", action="store_true")
            sp.add_argument("--axes", type=parse_axes, help="emit only this pair, e.g. 1,2")
        else:
            sp.add_argument("--axes-used", type=int, default=2)
        out_opt(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("biplot", help="observation and variable sPCs on common axes")
    sp.add_argument("--model", required=True)
    sp.add_argument("--matrix", help="observations to project (default: training units)")
    design_opts(sp)
    reference_opt(sp)
    sp.add_argument("--multiplier", type=float, default=1.0)
    sp.add_argument("--axes", type=parse_axes)
    out_opt(sp)
    sp.set_defaults(func=cmd_biplot)

    sp = sub.add_parser("fluctuation", help="RMS within-group SD on (sPC1, sPC2)")
    sp.add_argument("--scores", required=True)
    design_opts(sp, required=True)
    sp.add_argument("--mode", choices=scores.FLUCTUATION_MODES, default="scatter")
    out_opt(sp)
    sp.set_defaults(func=cmd_fluctuation)

    sp = sub.add_parser("anova", help="probe + group two-way ANOVA per variable")
    sp.add_argument("--probes", required=True)
    design_opts(sp, required=True)
    sp.add_argument("--threshold", type=float, default=anova.DEFAULT_THRESHOLD)
    out_opt(sp)
    sp.set_defaults(func=cmd_anova)

    sp = sub.add_parser("enrich", help="binomial keyword enrichment")
    sp.add_argument("--annotations", required=True)
    sp.add_argument("--model", help="universe = model variables; also the source for top-k selection")
    sp.add_argument("--universe-size", type=int)
    sp.add_argument("--selected", help="selected variable IDs, one per line")
    sp.add_argument("--axis", type=int, default=1)
    sp.add_argument("--direction", choices=("largest", "smallest"), default="largest")
    sp.add_argument("--top", type=int, help="default 500 for largest, 100 for smallest")
    out_opt(sp)
    sp.set_defaults(func=cmd_enrich)

    sp = sub.add_parser("cluster", help="Ward hierarchical clustering baseline")
    sp.add_argument("--matrix", required=True)
    design_opts(sp)
    reference_opt(sp)
    sp.add_argument("--variables")
    out_opt(sp)
    sp.set_defaults(func=cmd_cluster)
    return p


class _Context:
    def __init__(self, argv):
        self.command_line = "expca " + " ".join(shlex.quote(a) for a in argv)
        self.stage = "setup"


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "threshold") and not 0 < args.threshold < 1:
        parser.error("--threshold must lie in (0, 1)")
    if hasattr(args, "multiplier") and not args.multiplier >= 1:
        parser.error("--multiplier must be >= 1")
    ctx = _Context(argv)
    try:
        args.func(args, ctx)
    except ExpcaError as exc:
        print(f"expca: {ctx.stage}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"expca: {ctx.stage}: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else list(argv)))


if __name__ == "__main__":
    main()
