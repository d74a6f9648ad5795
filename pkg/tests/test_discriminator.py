import numpy as np
import pytest

from gridskills import (DiscOutput, ap_class_scores, ap_loss_and_grad, ap_targets,
                        build_code_matrix, ova_loss_and_grad, predict_class)
from gridskills.nn import softmax_beta

from conftest import assert_grad_close, central_diff_grad

# Reference 5-class all-pairs code matrix, frozen.
CODE_K5 = np.array([
    [1,  1,  1,  1,  0,  0,  0,  0,  0,  0],
    [-1, 0,  0,  0,  1,  1,  1,  0,  0,  0],
    [0, -1,  0,  0, -1,  0,  0,  1,  1,  0],
    [0,  0, -1,  0,  0, -1,  0, -1,  0,  1],
    [0,  0,  0, -1,  0,  0, -1,  0, -1, -1],
])


def test_code_matrix_k5_exact():
    code = build_code_matrix(5)
    assert np.array_equal(code.entries, CODE_K5)


def test_code_matrix_k2():
    code = build_code_matrix(2)
    assert np.array_equal(code.entries, [[1], [-1]])
    assert code.pair_index == {(0, 1): 0}


def test_code_matrix_rejects_k1():
    with pytest.raises(ValueError):
        build_code_matrix(1)


@pytest.mark.parametrize("k", [2, 3, 5, 17, 100, 120])
def test_code_matrix_invariants(k):
    code = build_code_matrix(k)
    m = code.entries
    assert m.shape == (k, k * (k - 1) // 2)
    assert np.all((m == 0).sum(axis=0) == k - 2)          # each column: all but two zero
    assert np.all((m == 1).sum(axis=0) == 1)              # exactly one +1 per column
    assert np.all((m == -1).sum(axis=0) == 1)             # exactly one -1 per column
    assert np.all((m != 0).sum(axis=1) == k - 1)          # each row: K-1 nonzeros
    for (i, j), col in code.pair_index.items():
        assert i < j and m[i, col] == 1 and m[j, col] == -1


def test_code_matrix_column_order_lexicographic():
    code = build_code_matrix(4)
    pairs = sorted(code.pair_index, key=code.pair_index.get)
    assert pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_ap_targets():
    code = build_code_matrix(5)
    assert np.array_equal(ap_targets(code, 0), [1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    code2 = build_code_matrix(2)
    assert np.array_equal(ap_targets(code2, 1), [-1.0])
    for z in range(5):
        assert np.count_nonzero(ap_targets(code, z)) == 4
        # equivalently M^T onehot(z)
        onehot = np.zeros(5)
        onehot[z] = 1
        assert np.array_equal(ap_targets(code, z), code.entries.T @ onehot)


def test_disc_output_modes():
    out = DiscOutput("ova", np.array([1.0, 2.0, 3.0]), beta=2.0)
    assert abs(out.activated.sum() - 1) < 1e-12
    out_ap = DiscOutput("ap", np.array([-5.0, 0.0, 5.0]))
    assert np.all(np.abs(out_ap.activated) < 1.0)
    with pytest.raises(ValueError):
        DiscOutput("other", np.zeros(2))


def test_ap_loss_perfect_prediction():
    code = build_code_matrix(4)
    # logits large enough that tanh saturates to the clamp: loss ~ 1e-7
    logits = 50.0 * ap_targets(code, 1)
    out = DiscOutput("ap", logits)
    loss, _ = ap_loss_and_grad(out, 1, code, mask_dont_cares=True)
    assert loss == pytest.approx(-np.log(1 - 1e-7), rel=1e-3)
    assert loss < 2e-7


def test_ap_loss_zero_output_is_log2():
    code = build_code_matrix(6)
    out = DiscOutput("ap", np.zeros(code.n_pairs))
    for masked in (True, False):
        loss, _ = ap_loss_and_grad(out, 2, code, mask_dont_cares=masked)
        assert loss == pytest.approx(np.log(2), rel=1e-12)


def test_ap_loss_masked_ignores_dont_cares():
    code = build_code_matrix(5)
    rng = np.random.default_rng(0)
    logits = rng.normal(size=code.n_pairs)
    z = 3
    loss0, grad0 = ap_loss_and_grad(DiscOutput("ap", logits), z, code, True)
    perturbed = logits.copy()
    dont_care = np.flatnonzero(code.entries[z] == 0)
    perturbed[dont_care] += rng.normal(size=dont_care.size) * 10
    loss1, grad1 = ap_loss_and_grad(DiscOutput("ap", perturbed), z, code, True)
    assert loss1 == pytest.approx(loss0, abs=1e-15)
    assert np.array_equal(grad0[dont_care], np.zeros(dont_care.size))
    assert np.allclose(grad0, grad1)


def test_ap_loss_unmasked_dont_cares_pull_to_half():
    code = build_code_matrix(3)
    z = 0
    loss_at = lambda v: ap_loss_and_grad(
        DiscOutput("ap", np.array([0.0, 0.0, v])), z, code, mask_dont_cares=False)[0]
    # column 2 pairs classes (1,2): a don't-care for z=0, optimal at logit 0
    assert loss_at(0.0) < loss_at(1.0)
    assert loss_at(0.0) < loss_at(-1.0)


@pytest.mark.parametrize("masked", [True, False])
def test_ap_grad_finite_differences(masked):
    rng = np.random.default_rng(7)
    code = build_code_matrix(6)
    for _ in range(20):
        logits = rng.normal(size=code.n_pairs)
        z = int(rng.integers(6))

        def loss_of(lg):
            return ap_loss_and_grad(DiscOutput("ap", lg), z, code, masked)[0]

        _, grad = ap_loss_and_grad(DiscOutput("ap", logits), z, code, masked)
        assert_grad_close(grad, central_diff_grad(loss_of, logits), rtol=1e-5)


def test_ova_loss_uniform_is_log_k():
    out = DiscOutput("ova", np.zeros(9))
    loss, _ = ova_loss_and_grad(out, 4)
    assert loss == pytest.approx(np.log(9), rel=1e-12)


def test_ova_loss_confident_goes_to_zero():
    logits = np.zeros(5)
    logits[2] = 40.0
    loss, _ = ova_loss_and_grad(DiscOutput("ova", logits), 2)
    assert loss < 1e-6


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_ova_grad_finite_differences(beta):
    # logits scaled with 1/beta keep p_z clear of the log clamp, where the
    # loss is deliberately flat but the gradient keeps its CE form
    rng = np.random.default_rng(11)
    for _ in range(20):
        logits = rng.normal(size=7) / max(beta, 1.0)
        z = int(rng.integers(7))

        def loss_of(lg):
            return ova_loss_and_grad(DiscOutput("ova", lg, beta=beta), z)[0]

        _, grad = ova_loss_and_grad(DiscOutput("ova", logits, beta=beta), z)
        assert_grad_close(grad, central_diff_grad(loss_of, logits), rtol=1e-5)


def test_ap_class_scores_uniform_for_zero():
    code = build_code_matrix(8)
    scores = ap_class_scores(code, np.zeros(code.n_pairs))
    assert np.allclose(scores, 1 / 8)


def test_ap_class_scores_k2_closed_form():
    code = build_code_matrix(2)
    scores = ap_class_scores(code, np.array([1.0]))
    expected = softmax_beta(np.array([1.0, -1.0]), 1.0)
    assert np.allclose(scores, expected)
    assert scores[0] == pytest.approx(0.8807970779778823, rel=1e-12)


def test_ap_class_scores_sum_to_one():
    rng = np.random.default_rng(13)
    code = build_code_matrix(10)
    for _ in range(10):
        scores = ap_class_scores(code, rng.uniform(-1, 1, size=code.n_pairs))
        assert abs(scores.sum() - 1.0) < 1e-12


@pytest.mark.parametrize("k", [2, 5, 9])
def test_ap_scores_argmax_at_scaled_targets(k):
    code = build_code_matrix(k)
    for z in range(k):
        for c in (0.1, 0.5, 0.99):
            scores = ap_class_scores(code, c * ap_targets(code, z))
            assert int(np.argmax(scores)) == z


def test_predict_class_ova():
    out = DiscOutput("ova", np.log(np.array([0.1, 0.7, 0.2])))
    assert predict_class(out) == 1


def test_predict_class_ap_consistent_votes():
    code = build_code_matrix(7)
    for z in range(7):
        out = DiscOutput("ap", 3.0 * ap_targets(code, z))
        assert predict_class(out, code) == z


def test_predict_class_tie_breaks_low():
    assert predict_class(DiscOutput("ova", np.zeros(5))) == 0
    code = build_code_matrix(4)
    assert predict_class(DiscOutput("ap", np.zeros(code.n_pairs)), code) == 0
    with pytest.raises(ValueError):
        predict_class(DiscOutput("ap", np.zeros(code.n_pairs)))
