import numpy as np
import torch
import pytest

from remodelgan.errors import ShapeError
from remodelgan.loss import rlsgan_losses


def losses(real, fake):
    ld, lg = rlsgan_losses(torch.tensor(real), torch.tensor(fake))
    return float(ld), float(lg)


# -------------------------------------------------------------- hand oracles


def test_unit_margin_is_the_discriminator_optimum():
    ld, lg = losses([1.5, 0.25], [0.5, -0.75])  # d_real = d_fake + 1
    assert ld == 0.0
    assert lg == 4.0


def test_tied_scores_cost_one_each_way():
    ld, lg = losses([0.3, -0.2], [0.3, -0.2])
    assert ld == pytest.approx(1.0)
    assert lg == pytest.approx(1.0)


def test_scalar_batch_oracle():
    # diffs real-fake: [0.25, -1.0] -> L_D = (0.75^2 + 2^2) / 2
    # diffs fake-real: [-0.25, 1.0] -> L_G = (1.25^2 + 0) / 2
    ld, lg = losses([0.5, -0.25], [0.25, 0.75])
    assert ld == pytest.approx((0.5625 + 4.0) / 2)
    assert lg == pytest.approx(1.5625 / 2)


def test_swapping_real_and_fake_swaps_the_losses():
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.normal(size=4).astype(np.float32)
        f = rng.normal(size=4).astype(np.float32)
        ld, lg = losses(r, f)
        ld_sw, lg_sw = losses(f, r)
        assert ld == pytest.approx(lg_sw)
        assert lg == pytest.approx(ld_sw)


def test_pairing_is_positional_not_batch_averaged():
    # same multiset of scores, different pairing -> different losses
    ld_a, _ = losses([1.0, 0.0], [0.0, 1.0])
    ld_b, _ = losses([1.0, 0.0], [1.0, 0.0])
    assert ld_a != ld_b


def test_losses_keep_gradients():
    d_real = torch.tensor([0.2, 0.4], requires_grad=True)
    d_fake = torch.tensor([0.1, -0.3], requires_grad=True)
    ld, lg = rlsgan_losses(d_real, d_fake)
    ld.backward(retain_graph=True)
    lg.backward()
    assert d_real.grad is not None and torch.all(torch.isfinite(d_real.grad))
    assert d_fake.grad is not None and torch.all(torch.isfinite(d_fake.grad))


def test_finite_for_bounded_scores():
    rng = np.random.default_rng(11)
    for _ in range(50):
        r = rng.uniform(-10, 10, size=8).astype(np.float32)
        f = rng.uniform(-10, 10, size=8).astype(np.float32)
        ld, lg = losses(r, f)
        assert np.isfinite(ld) and np.isfinite(lg)


def test_batch_mismatch_is_a_shape_error():
    with pytest.raises(ShapeError):
        rlsgan_losses(torch.zeros(2), torch.zeros(3))
