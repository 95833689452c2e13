import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from src.errors import DTypeMismatchError, GradientError, ShapeMismatchError
from src.tensor import Function, GradTape, Tensor, check_gradients, finite_difference_gradient, no_grad
from src.tensor import functional as F


def leaf(array):
    return Tensor(np.asarray(array, dtype=np.float64), requires_grad=True)


def test_broadcast_add_gradients_sum_back_to_operand_shapes():
    a = leaf(np.zeros((3, 1)))
    b = leaf(np.zeros(4))
    (a + b).sum().backward()
    np.testing.assert_array_equal(a.grad, np.full((3, 1), 4.0))
    np.testing.assert_array_equal(b.grad, np.full(4, 3.0))


def test_full_reductions_are_zero_dimensional():
    x = leaf(np.ones((3, 4)))
    total = x.sum()
    assert total.shape == ()
    total.backward()
    np.testing.assert_array_equal(x.grad, np.ones((3, 4)))

    x.zero_grad()
    average = x.mean()
    assert average.shape == ()
    average.backward()
    np.testing.assert_allclose(x.grad, np.full((3, 4), 1.0 / 12.0))


def test_scalar_leaf_keeps_its_shape():
    assert Tensor(2.5).shape == ()
    assert Tensor(np.float64(2.5), dtype=np.float64).item() == 2.5


def test_shared_subexpression_accumulates_both_paths():
    x = leaf([1.0, -2.0, 3.0])
    y = x * x + x
    y.sum().backward()
    np.testing.assert_allclose(x.grad, 2 * x.data + 1)


def test_repeated_backward_accumulates_until_zero_grad():
    x = leaf([2.0])
    (x * 3.0).sum().backward()
    (x * 3.0).sum().backward()
    np.testing.assert_array_equal(x.grad, [6.0])
    x.zero_grad()
    assert x.grad is None


def test_backward_needs_scalar_loss():
    x = leaf(np.ones((2, 2)))
    with pytest.raises(GradientError):
        (x * 2.0).backward()


def test_backward_needs_attached_loss():
    detached = Tensor(np.ones(3)).sum()
    with pytest.raises(GradientError):
        detached.backward()


def test_no_grad_records_nothing():
    x = leaf([1.0, 2.0])
    with no_grad():
        y = (x * x).sum()
    assert not y.requires_grad
    assert y.creator is None


def test_tape_lists_every_recorded_node_once():
    x = leaf([1.0, 2.0])
    h = x * 2.0
    loss = (h + h).sum()
    tape = GradTape.record(loss)
    assert len(tape) == len({id(node) for node in tape})
    assert loss in list(tape)


def test_mixed_dtypes_are_rejected():
    with pytest.raises(DTypeMismatchError):
        Tensor(np.ones(2, dtype=np.float32)) + Tensor(np.ones(2, dtype=np.float64))


def test_integer_data_defaults_to_float32():
    assert Tensor([1, 2, 3]).dtype == np.float32


def test_matmul_names_mismatched_axes():
    with pytest.raises(ShapeMismatchError, match="axis -1"):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((4, 5)))


def test_softmax_is_finite_for_huge_logits():
    x = Tensor(np.array([[1000.0, 1001.0, 1002.0], [-1e4, 0.0, 1e4]]))
    out = F.softmax(x, axis=-1).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out.sum(axis=-1), 1.0)
    np.testing.assert_allclose(out[0], special.softmax([0.0, 1.0, 2.0]), rtol=1e-12)


def test_fully_masked_row_gives_zero_weights():
    scores = Tensor(np.zeros((1, 2, 3)))
    mask = np.zeros((1, 2, 3))
    mask[0, 1, :] = -np.inf
    out = F.softmax(F.attention_bias(scores, mask), axis=-1).data
    np.testing.assert_array_equal(out[0, 1], 0.0)
    np.testing.assert_allclose(out[0, 0], 1.0 / 3.0)


def test_cross_entropy_matches_log_softmax(rng):
    logits = rng.standard_normal((5, 7)) * 4.0
    labels = np.array([0, 6, 3, 3, 1])
    loss = F.cross_entropy(Tensor(logits), labels).item()
    expected = -special.log_softmax(logits, axis=1)[np.arange(5), labels].mean()
    assert loss == pytest.approx(expected, rel=1e-12)


def test_cross_entropy_keeps_tiny_losses_exact():
    logits = Tensor(np.array([[30.0, 0.0, 0.0]]))
    loss = F.cross_entropy(logits, np.array([0])).item()
    assert loss == pytest.approx(np.log1p(2 * np.exp(-30.0)), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=-7, max_value=7),
    st.integers(min_value=-7, max_value=7),
)
def test_roll_is_inverted_by_the_opposite_roll(height, width, dy, dx):
    x = Tensor(np.arange(height * width, dtype=np.float64).reshape(1, height, width))
    back = F.roll(F.roll(x, (dy, dx), (1, 2)), (-dy, -dx), (1, 2))
    np.testing.assert_array_equal(back.data, x.data)


def test_roll_backward_routes_gradient_to_source_position():
    x = leaf(np.zeros((1, 4)))
    weights = Tensor(np.array([[1.0, 2.0, 3.0, 4.0]]))
    (F.roll(x, (1,), (1,)) * weights).sum().backward()
    np.testing.assert_array_equal(x.grad, [[2.0, 3.0, 4.0, 1.0]])


def test_gather_accumulates_repeated_indices():
    table = leaf(np.zeros((3, 2)))
    F.gather(table, np.array([0, 0, 2])).sum().backward()
    np.testing.assert_array_equal(table.grad, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])


def test_l2_normalize_gives_unit_rows(rng):
    out = F.l2_normalize(Tensor(rng.standard_normal((4, 6))), axis=-1).data
    np.testing.assert_allclose(np.linalg.norm(out, axis=-1), 1.0)


def test_finite_differences_need_float64():
    with pytest.raises(DTypeMismatchError):
        finite_difference_gradient(lambda t: t.sum(), Tensor(np.ones(3, dtype=np.float32)))


def test_finite_difference_gradient_of_a_quadratic():
    x = Tensor(np.array([1.0, -2.0, 0.5]))
    grad = finite_difference_gradient(lambda t: (t * t).sum(), x).data
    np.testing.assert_allclose(grad, 2 * x.data, rtol=1e-8)


class _WrongSquare(Function):
    def forward(self, x):
        self.x = x
        return x * x

    def backward(self, grad):
        return (grad * 3.0 * self.x,)


def test_corrupted_backward_is_detected(rng):
    x = Tensor(rng.standard_normal(5))
    result = check_gradients(lambda: _WrongSquare.apply(x), {"x": x}, name="wrong_square")
    assert not result.passed
    assert result.max_error > 0.1


def test_correct_backward_passes(rng):
    x = Tensor(rng.standard_normal((3, 4)))
    w = Tensor(rng.standard_normal((4, 2)))
    result = check_gradients(lambda: F.tanh(x @ w), {"x": x, "w": w}, name="tanh_matmul")
    assert result.passed, result.errors
