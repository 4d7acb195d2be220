import numpy as np
import pytest
from numpy.testing import assert_allclose

from autoeq.autodiff import Tensor
from autoeq.losses import finetune_loss, parameter_loss, penalty_loss, spectral_loss


def test_parameter_loss_examples():
    v = np.full((1, 10), 0.4)
    assert float(parameter_loss(v, Tensor(v)).values) == 0.0
    assert_allclose(float(parameter_loss(v, Tensor(v + 0.1)).values), 1.0, rtol=1e-12)
    off = v.copy()
    off[0, 3] += 0.5
    assert_allclose(float(parameter_loss(v, Tensor(off)).values), 0.5, rtol=1e-12)


def test_parameter_loss_batch_mean():
    v = np.zeros((4, 10))
    pred = np.zeros((4, 10))
    pred[0] += 0.1  # one example contributes 1.0
    assert_allclose(float(parameter_loss(v, Tensor(pred)).values), 0.25, rtol=1e-12)


def test_parameter_loss_shape_check():
    with pytest.raises(ValueError):
        parameter_loss(np.zeros((1, 10)), Tensor(np.zeros((2, 10))))


def test_spectral_loss_examples():
    x = np.random.default_rng(0).standard_normal((1, 256))
    assert float(spectral_loss(x, Tensor(x)).values) == 0.0
    assert_allclose(float(spectral_loss(x, Tensor(x + 1.0)).values), 1.0, rtol=1e-12)


def test_spectral_loss_reads_as_db_mae():
    x = np.zeros((2, 256))
    pred = np.zeros((2, 256))
    pred[0, :128] = 2.0  # a quarter of all bins off by 2 dB
    assert_allclose(float(spectral_loss(x, Tensor(pred)).values), 0.5, rtol=1e-12)


def test_penalty_zero_inside_unit_cube():
    v = Tensor(np.random.default_rng(1).uniform(0.0, 1.0, (8, 10)))
    assert float(penalty_loss(v).values) == 0.0


def test_penalty_examples_exact():
    v = np.full((1, 10), 0.5)
    v[0, 2] = 1.2
    assert float(penalty_loss(Tensor(v)).values) == pytest.approx(0.2, abs=1e-15)
    v[0, 2] = -0.3
    assert float(penalty_loss(Tensor(v)).values) == pytest.approx(0.3, abs=1e-15)


def test_penalty_gradient_is_unit_hinge():
    v = Tensor(np.array([[-0.5, 0.3, 1.7, 0.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5]]))
    penalty_loss(v).backward()
    # slope -1 below 0, +1 above 1, 0 strictly inside; boundary points have
    # subgradient 0 (both hinges inactive at exactly 0 and 1)
    assert_allclose(v.grad[0], [-1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def test_finetune_loss_composition():
    x = np.zeros((1, 256))
    v_in = Tensor(np.full((1, 10), 0.5))
    assert float(finetune_loss(x, Tensor(x), v_in, lam=1.0).values) == 0.0

    v_out = np.full((1, 10), 0.5)
    v_out[0, 0] = 1.5
    got = float(finetune_loss(x, Tensor(x), Tensor(v_out), lam=1.0).values)
    assert_allclose(got, 0.5, rtol=1e-12)

    # lambda scales only the penalty term
    got2 = float(finetune_loss(x, Tensor(x + 1.0), Tensor(v_out), lam=0.0).values)
    assert_allclose(got2, 1.0, rtol=1e-12)


def test_losses_backprop_to_predictions():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((2, 256))
    pred = Tensor(rng.standard_normal((2, 256)))
    spectral_loss(x, pred).backward()
    assert_allclose(pred.grad, np.sign(pred.values - x) / pred.values.size)
