import numpy as np
import pytest
import scipy.stats

from voldeid.errors import (
    DegenerateHistogram,
    FormatError,
    InvalidThreshold,
    NonCubicVolume,
)
from voldeid.volume import (
    MASK,
    Rotation,
    Volume,
    binarize,
    otsu_threshold,
    read_volume,
    rng_from,
    rotate_mask,
    sample_uniform_rotation,
    write_volume,
)


def solid_ball(s: int, radius: float) -> Volume:
    c = (s - 1) / 2.0
    ax = np.arange(s) - c
    d2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    return Volume((d2 <= radius * radius).astype(np.float32), kind=MASK)


# ---------------------------------------------------------------- volume type


def test_volume_rejects_bad_mask_values():
    with pytest.raises(ValueError):
        Volume(np.full((2, 2, 2), 0.5, np.float32), kind=MASK)


def test_volume_is_immutable():
    v = Volume(np.zeros((2, 2, 2), np.float32))
    with pytest.raises((ValueError, AttributeError)):
        v.data[0, 0, 0] = 1.0


def test_volume_does_not_alias_caller_array():
    a = np.zeros((2, 2, 2), np.float32)
    v = Volume(a)
    a[0, 0, 0] = 7.0
    assert v.data[0, 0, 0] == 0.0


# ------------------------------------------------------------------- binarize


def test_binarize_all_zero():
    x = Volume(np.zeros((3, 3, 3), np.float32))
    assert np.array_equal(binarize(x, 0.1).data, np.zeros((3, 3, 3)))


def test_binarize_gradient_along_k0():
    data = np.empty((4, 4, 4), np.float32)
    for k0 in range(4):
        data[k0] = k0
    m = binarize(Volume(data), 2.0)
    expect = np.zeros((4, 4, 4), np.float32)
    expect[2:] = 1.0
    assert np.array_equal(m.data, expect)


def test_binarize_saturated():
    x = Volume(np.full((3, 3, 3), 5.0, np.float32))
    assert np.array_equal(binarize(x, 0.5).data, np.ones((3, 3, 3)))


def test_binarize_nonfinite_threshold():
    x = Volume(np.zeros((2, 2, 2), np.float32))
    with pytest.raises(InvalidThreshold):
        binarize(x, float("nan"))


def test_binarize_idempotent_on_masks():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = Volume(rng.random((6, 6, 6)).astype(np.float32))
        delta = float(rng.uniform(0.1, 0.9))
        m = binarize(x, delta)
        again = binarize(m, 0.5)
        assert np.array_equal(m.data, again.data)


# ----------------------------------------------------------------------- otsu


def test_otsu_bimodal_splits_exactly():
    rng = np.random.default_rng(0)
    data = np.zeros(8**3, np.float32)
    data[: data.size // 2] = 1.0
    rng.shuffle(data)
    x = Volume(data.reshape(8, 8, 8))
    t = otsu_threshold(x)
    assert 0.0 < t < 1.0
    assert np.array_equal(binarize(x, t).data.reshape(-1), data)


def test_otsu_constant_raises():
    with pytest.raises(DegenerateHistogram):
        otsu_threshold(Volume(np.full((4, 4, 4), 3.3, np.float32)))


def test_otsu_background_vs_head():
    rng = np.random.default_rng(42)
    labels = rng.random((16, 16, 16)) < 0.4  # head voxels
    data = np.where(
        labels,
        rng.normal(0.8, 0.05, labels.shape),
        rng.normal(0.05, 0.01, labels.shape),
    ).astype(np.float32)
    t = otsu_threshold(Volume(data))
    miscls = np.count_nonzero((data >= t) != labels) / labels.size
    assert miscls < 0.01


# ------------------------------------------------------------------ rotations


def test_rotation_norm_validated():
    with pytest.raises(ValueError):
        Rotation(1.0, 0.5, 0.0, 0.0)


def test_rotation_compose_inverse_is_identity():
    rng = rng_from(3)
    for _ in range(10):
        r = sample_uniform_rotation(rng)
        eye = r.compose(r.inverse()).matrix()
        assert np.max(np.abs(eye - np.eye(3))) < 1e-9


def test_sample_rotation_deterministic():
    a = sample_uniform_rotation(rng_from(123))
    b = sample_uniform_rotation(rng_from(123))
    assert (a.w, a.x, a.y, a.z) == (b.w, b.x, b.y, b.z)


def test_rng_from_splits_independently():
    # Child streams keyed differently must differ; same key must agree.
    a = rng_from(9, 0).random(4)
    b = rng_from(9, 1).random(4)
    c = rng_from(9, 0).random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_sample_rotation_symmetry():
    rng = rng_from(2024)
    acc = np.zeros(3)
    n = 10**5
    for _ in range(n):
        r = sample_uniform_rotation(rng)
        acc += r.matrix() @ np.array([0.0, 0.0, 1.0])
    assert np.linalg.norm(acc / n) < 0.02


def test_sample_rotation_angle_density():
    # Rotation angle on SO(3) has density (1 - cos t) / pi on [0, pi].
    rng = rng_from(77)
    n = 10**5
    angles = np.array([sample_uniform_rotation(rng).angle() for _ in range(n)])
    bins = np.linspace(0.0, np.pi, 19)
    observed, _ = np.histogram(angles, bins=bins)
    cdf = (bins - np.sin(bins)) / np.pi
    expected = np.diff(cdf) * n
    stat = scipy.stats.chisquare(observed, expected)
    assert stat.pvalue > 0.01


# ---------------------------------------------------------------- rotate_mask


def test_rotate_identity_bit_equal():
    rng = np.random.default_rng(5)
    m = Volume((rng.random((8, 8, 8)) < 0.3).astype(np.float32), kind=MASK)
    out = rotate_mask(m, Rotation.identity())
    assert np.array_equal(out.data, m.data)


def test_rotate_non_cubic_raises():
    m = Volume(np.zeros((2, 3, 2), np.float32), kind=MASK)
    with pytest.raises(NonCubicVolume):
        rotate_mask(m, Rotation.identity())


def test_rotate_roundtrip_ball():
    s = 32
    m = solid_ball(s, s / 4)
    r = Rotation.from_axis_angle((1.0, 0.7, -0.3), 0.9)
    back = rotate_mask(rotate_mask(m, r), r, inverse=True)
    agree = np.count_nonzero(back.data == m.data) / m.data.size
    assert agree >= 0.99


def test_rotate_90deg_single_voxel():
    s = 32
    data = np.zeros((s, s, s), np.float32)
    k = (4, 10, 20)
    data[k] = 1.0
    r = Rotation.from_axis_angle((1.0, 0.0, 0.0), np.pi / 2)
    out = rotate_mask(Volume(data, kind=MASK), r)
    c = (s - 1) / 2.0
    # Hand-rotated target: 90 deg about k0 sends (k1-c, k2-c) to (-(k2-c), k1-c).
    target = (k[0], round(c - (k[2] - c)), round(c + (k[1] - c)))
    assert out.data[target] == 1.0
    assert np.count_nonzero(out.data) == 1


def test_rotate_preserves_maskness_and_count():
    rng = rng_from(11)
    s = 32
    for radius in (4.0, 7.5, 11.0):
        m = solid_ball(s, radius)
        r = sample_uniform_rotation(rng)
        out = rotate_mask(m, r)
        assert set(np.unique(out.data)) <= {0.0, 1.0}
        n_in = np.count_nonzero(m.data)
        n_out = np.count_nonzero(out.data)
        assert abs(n_out - n_in) / n_in < 0.05


def test_rotate_accepts_probability_maps():
    rng = np.random.default_rng(1)
    p = Volume(rng.random((8, 8, 8)).astype(np.float32), kind="prob")
    out = rotate_mask(p, Rotation.from_axis_angle((0, 0, 1.0), 0.4))
    assert out.kind == "prob"
    assert np.all((out.data >= 0) & (out.data <= 1))


# ------------------------------------------------------------------- file I/O


def test_vol1_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    for dims in ((4, 4, 4), (3, 5, 2)):
        v = Volume(rng.random(dims).astype(np.float32))
        p = tmp_path / "v.vol"
        write_volume(v, p)
        back = read_volume(p)
        assert back.dims == v.dims
        assert np.array_equal(back.data, v.data)


def test_vol1_bad_magic(tmp_path):
    p = tmp_path / "bad.vol"
    p.write_bytes(b"NOPE" + bytes(16) + bytes(4 * 8))
    with pytest.raises(FormatError) as e:
        read_volume(p)
    assert e.value.offset == 0


def test_vol1_bad_dtype(tmp_path):
    import struct

    p = tmp_path / "bad.vol"
    p.write_bytes(struct.pack("<4sB3x3I", b"VOL1", 0x02, 2, 2, 2) + bytes(32))
    with pytest.raises(FormatError) as e:
        read_volume(p)
    assert e.value.offset == 4


def test_vol1_truncated_payload(tmp_path):
    import struct

    # Header says 4^3 voxels but only 63 are present.
    p = tmp_path / "short.vol"
    p.write_bytes(struct.pack("<4sB3x3I", b"VOL1", 0x01, 4, 4, 4) + bytes(63 * 4))
    with pytest.raises(FormatError):
        read_volume(p)


def test_vol1_zero_dim(tmp_path):
    import struct

    p = tmp_path / "zero.vol"
    p.write_bytes(struct.pack("<4sB3x3I", b"VOL1", 0x01, 0, 4, 4))
    with pytest.raises(FormatError) as e:
        read_volume(p)
    assert e.value.offset == 8


def test_write_rejects_non_finite(tmp_path):
    v = Volume(np.full((2, 2, 2), np.inf, np.float32))
    with pytest.raises(ValueError):
        write_volume(v, tmp_path / "x.vol")
