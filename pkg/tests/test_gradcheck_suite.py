import numpy as np
import pytest

from src.analysis.gradcheck_suite import (
    REGISTRY,
    REPORT_COLUMNS,
    SCOPES,
    VARIANTS,
    GradCheckCase,
    run_gradcheck,
    select_cases,
)
from src.tensor import Function, Tensor, check_gradients, relative_error
from src.tensor import functional as F


class _DoubledTanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (2.0 * grad * (1.0 - self.out ** 2),)


def _broken_case(variant):
    x = Tensor(np.random.default_rng(variant).standard_normal([(2, 3), (4,), (3, 2, 2)][variant]))
    return (lambda: _DoubledTanh.apply(x)), {"x": x}


def test_every_scope_has_cases():
    assert {case.scope for case in REGISTRY} == set(SCOPES)
    names = [case.name for case in REGISTRY]
    assert len(names) == len(set(names))


def test_every_case_runs_three_distinct_shapes_on_all_coordinates():
    for case in REGISTRY:
        assert case.variants >= VARIANTS == 3
        assert case.max_coords is None, case.name
        shapes = set()
        for variant in range(case.variants):
            _, tensors = case.build(variant)
            shapes.add(tuple(t.shape for t in tensors.values()))
        assert len(shapes) == case.variants, case.name


def test_kernel_checks_all_pass():
    report = run_gradcheck("kernels")
    assert list(report.columns) == REPORT_COLUMNS
    assert len(report) == len(select_cases("kernels"))
    failed = report.loc[~report["passed"], "unit"].tolist()
    assert not failed, failed
    assert (report["max_error"] < report["tolerance"]).all()
    assert (report["variants"] == VARIANTS).all()


def test_wrong_backward_is_a_failure_row_not_an_exception():
    report = run_gradcheck("kernels", cases=[GradCheckCase("kernels", "doubled_tanh", _broken_case)])
    row = report.iloc[0]
    assert row["unit"] == "doubled_tanh"
    assert row["worst_tensor"] == "x"
    assert row["worst_variant"] in range(VARIANTS)
    assert not row["passed"]
    assert row["max_error"] > 0.1


def test_relative_error_is_plain_ratio_on_nonzero_gradients():
    numeric = np.array([1.0, 1e-3])
    analytic = np.array([1.0, 1.1e-3])
    assert relative_error(analytic, numeric) == pytest.approx(0.1 / (1.0 + 1e-5), rel=1e-6)


def test_relative_error_floors_only_zero_gradients():
    numeric = np.array([1.0, 1e-12])
    assert relative_error(np.array([1.0, 0.0]), numeric) < 1e-8
    # a small but clearly nonzero analytic value where the truth is zero is still caught
    assert relative_error(np.array([1.0, 1e-3]), numeric) > 0.1


def test_bias_ahead_of_batch_norm_has_a_zero_gradient_that_passes():
    rng = np.random.default_rng(3)
    x = Tensor(rng.standard_normal((6, 3)))
    bias = Tensor(rng.standard_normal(3))
    gamma, beta = Tensor(np.ones(3)), Tensor(np.zeros(3))
    mean, var = np.zeros(3), np.ones(3)
    result = check_gradients(
        lambda: F.tanh(F.batch_norm(x + bias, gamma, beta, mean, var, True)),
        {"x": x, "bias": bias},
        name="bias_before_bn",
    )
    assert result.passed, result.errors


def test_scope_filter():
    cases = [GradCheckCase("head", "h", _broken_case), GradCheckCase("sst", "s", _broken_case)]
    assert [c.name for c in select_cases("sst", cases)] == ["s"]
    assert len(select_cases("all", cases)) == 2


def test_unknown_scope_is_rejected():
    with pytest.raises(ValueError, match="scope must be one of"):
        select_cases("everything")


@pytest.mark.slow
@pytest.mark.parametrize("scope", [s for s in SCOPES if s != "kernels"])
def test_composite_checks_pass(scope):
    report = run_gradcheck(scope)
    failed = report.loc[~report["passed"], ["unit", "max_error"]]
    assert failed.empty, failed.to_string()
