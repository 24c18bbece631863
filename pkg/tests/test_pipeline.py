import time

from expca.scores import biplot_table, fluctuation, project, scale_variable_scores, variable_scores
from expca.synthetic import GroupedConfig, grouped
from expca.workflow import center_for_model, fit_design


def test_full_pipeline_under_ten_seconds():
    s = grouped(GroupedConfig(n_groups=10, replicates=5, m=2000))
    t0 = time.perf_counter()
    model = fit_design(s.matrix, s.design)
    z = project(center_for_model(s.matrix, model), model)
    table = biplot_table(z, scale_variable_scores(variable_scores(model)))
    fluctuation(z, s.design)
    assert time.perf_counter() - t0 < 10.0
    assert table.coords.shape == (50 + 2000, model.k)
