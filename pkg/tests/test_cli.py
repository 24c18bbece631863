import subprocess
import sys

import numpy as np
import pytest

from expca.axes import load_model
from expca.cli import parse_score_table, run
from expca.data import ExpressionMatrix, format_matrix
from expca.synthetic import GroupedConfig, ToxicologyConfig, grouped, toxicology


def _write_dataset(tmp_path, synth, name="m"):
    mpath = tmp_path / f"{name}.tsv"
    dpath = tmp_path / f"{name}_design.tsv"
    mpath.write_text(format_matrix(synth.matrix))
    dpath.write_text("".join(f"{o}\t{g}\n" for o, g in synth.design.assignments.items()))
    return mpath, dpath


@pytest.fixture
def dataset(tmp_path):
    s = grouped(GroupedConfig(n_groups=4, replicates=3, m=60, seed=2))
    mpath, dpath = _write_dataset(tmp_path, s)
    return s, mpath, dpath


@pytest.fixture
def fitted(tmp_path, dataset):
    s, mpath, dpath = dataset
    model = tmp_path / "model.axes"
    assert run(["fit", "--matrix", str(mpath), "--design", str(dpath),
                "--reference", "global-mean", "--out", str(model)]) == 0
    return s, mpath, dpath, model


def _table(path):
    rows = [ln.split("\t") for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return rows[0], rows[1:]


def test_fit_writes_model(fitted):
    s, _, _, model = fitted
    m = load_model(model)
    assert m.unit_labels == s.design.groups and m.m == 60


def test_project_training_means(tmp_path, fitted):
    s, _, _, model = fitted
    m = load_model(model)
    means = np.vstack([s.matrix.values[s.design.members(g, s.matrix.observation_ids)].mean(axis=0)
                       for g in s.design.groups])
    mp = tmp_path / "means.tsv"
    mp.write_text(format_matrix(ExpressionMatrix(s.design.groups, s.matrix.variable_ids, means,
                                                 np.zeros(means.shape, bool))))
    out = tmp_path / "scores.tsv"
    assert run(["project", "--model", str(model), "--matrix", str(mp), "--out", str(out)]) == 0
    z = parse_score_table(out.read_text())
    expected = m.left * m.singulars / np.sqrt(m.m)
    np.testing.assert_allclose(z.scores, expected, atol=1e-9)


def test_exclude_group_then_project(tmp_path):
    s = toxicology(ToxicologyConfig(m=300, seed=4))
    mpath, dpath = _write_dataset(tmp_path, s, "tox")
    model = tmp_path / "tox.axes"
    assert run(["fit", "--matrix", str(mpath), "--design", str(dpath), "--reference", "control:C",
                "--exclude-group", "G3", "--out", str(model)]) == 0
    assert "G3" not in load_model(model).unit_labels
    out = tmp_path / "cls.tsv"
    assert run(["classify", "--model", str(model), "--matrix", str(mpath), "--out", str(out)]) == 0
    header, rows = _table(out)
    g3 = [r[1] for r in rows if r[0].startswith("G3_")]
    assert len(g3) == 5 and set(g3) <= {"G1", "G5"}  # toxic-analog units


def test_plot_axes_and_guard(tmp_path, capsys):
    s = grouped(GroupedConfig(n_groups=2, replicates=3, m=20, seed=1))
    mpath, dpath = _write_dataset(tmp_path, s)
    model = tmp_path / "k2.axes"
    assert run(["fit", "--matrix", str(mpath), "--design", str(dpath), "--out", str(model)]) == 0
    out = tmp_path / "p.tsv"
    assert run(["project", "--model", str(model), "--matrix", str(mpath), "--axes", "1,2",
                "--out", str(out)]) == 0
    assert _table(out)[0] == ["label", "kind", "pc1", "pc2"]
    assert run(["project", "--model", str(model), "--matrix", str(mpath), "--axes", "2,3"]) == 1
    assert "axis 3 out of range" in capsys.readouterr().err


def test_byte_identical_reruns(tmp_path, fitted):
    s, mpath, dpath, model = fitted
    outs = []
    for name in ("a", "b"):
        m2 = tmp_path / f"{name}.axes"
        run(["fit", "--matrix", str(mpath), "--design", str(dpath), "--out", str(m2)])
        outs.append(m2.read_bytes())
    assert outs[0] == outs[1]
    runs = []
    for _ in range(2):
        out = tmp_path / "bp.tsv"
        run(["biplot", "--model", str(model), "--matrix", str(mpath), "--multiplier", "10",
             "--axes", "1,2", "--out", str(out)])
        runs.append(out.read_bytes())
    assert runs[0] == runs[1]
    text = runs[0].decode()
    assert "# obs_multiplier: 10" in text and "# model_sha256: " in text
    assert text.startswith("# command: expca biplot")


def test_biplot_multiplier_rows(tmp_path, fitted):
    _, _, _, model = fitted
    one, ten = tmp_path / "1.tsv", tmp_path / "10.tsv"
    run(["biplot", "--model", str(model), "--out", str(one)])
    run(["biplot", "--model", str(model), "--multiplier", "10", "--out", str(ten)])
    _, r1 = _table(one)
    _, r10 = _table(ten)
    for a, b in zip(r1, r10):
        f = 10.0 if a[1] == "observation" else 1.0
        np.testing.assert_allclose(np.array(b[2:], float), f * np.array(a[2:], float), rtol=1e-15)


def test_missing_observation_warning(tmp_path, fitted):
    s, _, _, model = fitted
    mp = tmp_path / "new.tsv"
    ids = s.matrix.variable_ids
    mp.write_text("v\tx1\tx2\n" + "".join(f"{v}\tNA\t1.0\n" for v in ids))
    out = tmp_path / "s.tsv"
    assert run(["project", "--model", str(model), "--matrix", str(mp), "--out", str(out)]) == 0
    assert "# warning: observation x1 has m_i = 0" in out.read_text()


def test_fluctuation_command(tmp_path, fitted):
    s, mpath, dpath, model = fitted
    sc = tmp_path / "s.tsv"
    run(["project", "--model", str(model), "--matrix", str(mpath), "--out", str(sc)])
    out = tmp_path / "f.tsv"
    assert run(["fluctuation", "--scores", str(sc), "--design", str(dpath), "--out", str(out)]) == 0
    value = float(out.read_text().splitlines()[-1].split("\t")[1])
    assert 0 < value < 1


def test_anova_enrich_cluster(tmp_path, fitted):
    s, mpath, dpath, model = fitted
    rng = np.random.default_rng(0)
    obs = s.matrix.observation_ids
    lines = ["variable_id\tprobe_id\t" + "\t".join(obs)]
    for j, v in enumerate(s.matrix.variable_ids[:10]):
        for p in range(3):
            vals = s.matrix.values[:, j] + rng.normal(0, 0.1, len(obs)) + p
            lines.append(f"{v}\tp{p}\t" + "\t".join(format(x, ".17g") for x in vals))
    probes = tmp_path / "probes.tsv"
    probes.write_text("\n".join(lines) + "\n")
    aout = tmp_path / "anova.tsv"
    assert run(["anova", "--probes", str(probes), "--design", str(dpath), "--out", str(aout)]) == 0
    header, rows = _table(aout)
    assert header == ["variable_id", "F", "df1", "df2", "p", "positive"]
    assert len(rows) == 10 and rows[0][2:4] == ["3", str(3 * 12 - 3 - 4 + 1)]

    ann = tmp_path / "ann.tsv"
    ann.write_text("".join(f"{v}\t{'even' if j % 2 == 0 else 'odd'}\n"
                           for j, v in enumerate(s.matrix.variable_ids)))
    eout = tmp_path / "enrich.tsv"
    assert run(["enrich", "--annotations", str(ann), "--model", str(model), "--top", "10",
                "--out", str(eout)]) == 0
    header, rows = _table(eout)
    assert header == ["keyword", "chip", "selected", "p-value"]
    assert sorted(r[0] for r in rows) == ["even", "odd"]
    assert sum(int(r[2]) for r in rows) == 10 and all(r[1] == "30" for r in rows)

    cout = tmp_path / "tree.tsv"
    assert run(["cluster", "--matrix", str(mpath), "--design", str(dpath),
                "--variables", str(aout), "--out", str(cout)]) == 0
    _, merges = _table(cout)
    assert len(merges) == len(obs) - 1


def test_usage_and_data_errors(tmp_path, capsys, dataset):
    _, mpath, dpath = dataset
    with pytest.raises(SystemExit) as exc:
        run(["fit", "--matrix", str(mpath)])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["anova", "--probes", "x", "--design", "y", "--threshold", "2"])
    assert exc.value.code == 2
    capsys.readouterr()
    assert run(["fit", "--matrix", str(mpath), "--design", str(dpath), "--reference", "control:nope",
                "--out", str(tmp_path / "x.axes")]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("expca: parse: ")
    bad = tmp_path / "bad.axes"
    bad.write_text("expca-model v99\n")
    assert run(["project", "--model", str(bad), "--matrix", str(mpath)]) == 1
    assert capsys.readouterr().err.startswith("expca: load: ")
    assert run(["project", "--model", str(tmp_path / "absent.axes"), "--matrix", str(mpath)]) == 1


def test_console_entry_point(tmp_path, fitted):
    _, mpath, _, model = fitted
    proc = subprocess.run([sys.executable, "-m", "expca.cli", "project", "--model", str(model),
                           "--matrix", str(mpath), "--axes", "1,2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "label\tkind\tpc1\tpc2" in proc.stdout
