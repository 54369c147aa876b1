"""Training configuration: the scale ladder and optimizer settings.

Configs round-trip through a flat ``key=value`` text file (one pair per
line, ``#`` comments), so runs can be reproduced from a single artifact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError

__all__ = ["GanConfig", "load_config", "save_config"]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GanConfig:
    """Scale ladder and hyperparameters.

    The generator runs s -> S doubling per block, the discriminator S -> s
    halving; both have num_blocks = log2(S/s) + 1 blocks.  ``widths`` gives
    the internal channel count per block, coarse to fine; only the first
    num_blocks entries are used.  ``optimizer`` selects "adamp" (Adam with
    tangential projection, the default) or "adam" as the plain fallback;
    the flag records the choice in every config file.
    """

    full_side: int = 32          # S
    base_side: int = 4           # s
    # 0.75x of the reference table (32, 32, 16, 16, 8, 8): the 500-step
    # acceptance run must fit 15 CPU minutes on a one-core box
    widths: tuple[int, ...] = (24, 24, 12, 12, 6, 6)
    expansion: int = 4
    learning_rate: float = 2e-3
    betas: tuple[float, float] = (0.0, 0.99)
    batch_size: int = 2
    optimizer: str = "adamp"
    seed: int = 0
    steps: int = 500

    def __post_init__(self):
        if not _is_pow2(self.full_side) or not _is_pow2(self.base_side):
            raise ConfigError(
                f"sides must be powers of two, got S={self.full_side}, "
                f"s={self.base_side}")
        if self.base_side < 2:
            # the seed noise lives one halving below the base scale
            raise ConfigError(f"base side must be >= 2, got {self.base_side}")
        if self.base_side > self.full_side:
            raise ConfigError(
                f"base side {self.base_side} exceeds full side {self.full_side}")
        if len(self.widths) < self.num_blocks:
            raise ConfigError(
                f"{self.num_blocks} blocks need {self.num_blocks} widths, "
                f"got {len(self.widths)}")
        if any(w < 1 for w in self.widths):
            raise ConfigError(f"widths must be positive, got {self.widths}")
        if self.expansion < 1:
            raise ConfigError(f"expansion must be >= 1, got {self.expansion}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.optimizer not in ("adamp", "adam"):
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def num_blocks(self) -> int:
        return (self.full_side // self.base_side).bit_length()  # log2(S/s)+1

    def gen_side(self, k: int) -> int:
        """Generator output side at block k (1-based): 2^(k-1) * s."""
        if not 1 <= k <= self.num_blocks:
            raise ConfigError(f"block index {k} outside 1..{self.num_blocks}")
        return self.base_side * 2 ** (k - 1)

    def disc_side(self, k: int) -> int:
        """Discriminator feature side at block k (1-based): S / 2^(k-1)."""
        if not 1 <= k <= self.num_blocks:
            raise ConfigError(f"block index {k} outside 1..{self.num_blocks}")
        return self.full_side // 2 ** (k - 1)

    def width_at_side(self, side: int) -> int:
        """Channel width for the block operating at the given side."""
        level = (side // self.base_side).bit_length() - 1
        return self.widths[level]

    @property
    def noise_side(self) -> int:
        """Side of the seed noise volume, one halving below the base scale."""
        return self.base_side // 2


_FIELD_TYPES = {f.name: f.type for f in fields(GanConfig)}


def save_config(cfg: GanConfig, path) -> None:
    with open(path, "w") as fh:
        for f in fields(GanConfig):
            v = getattr(cfg, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            fh.write(f"{f.name}={v}\n")


def _parse_value(name: str, raw: str):
    if name in ("widths", "betas"):
        parts = [p for p in raw.split(",") if p.strip()]
        return tuple(int(p) if name == "widths" else float(p) for p in parts)
    if name in ("learning_rate",):
        return float(raw)
    if name in ("optimizer",):
        return raw
    return int(raw)


def load_config(path) -> GanConfig:
    """Parse a flat key=value file; unknown keys are an error, missing keys
    fall back to the defaults."""
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, "
                                  f"got {line!r}")
            name, raw = (t.strip() for t in line.split("=", 1))
            if name not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {name!r}")
            try:
                overrides[name] = _parse_value(name, raw)
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: bad value {raw!r} for {name}") from None
    return replace(GanConfig(), **overrides)
