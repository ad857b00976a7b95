"""Run configuration: UTF-8 key=value files shared by every command.

Unknown keys are rejected and every codec/ODE precondition is validated at
load time, so a config that parses is a config that runs. Values may use
plain numbers or small fractions like 1/3072; '#' starts a comment. The
mixture key describes the analytic score field: 'none' for a zero field, or
comma-separated weight:mean:std components where mean is a scalar broadcast
over all dimensions or a '|'-separated per-dimension vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .codec import KEY_BYTES, NONCE_BYTES, CodecConfig, Mode, interval_geometry
from .ode import GaussianMixtureSpec, Scheduler, TimeGrid, build_time_grid, default_scheduler, zero_score

__all__ = ["RunConfig", "MixtureComponent", "CONFIG_KEYS"]


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    mean: tuple[float, ...]  # length 1 means broadcast
    s0: float


def _parse_number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_mixture(text: str) -> tuple[MixtureComponent, ...] | None:
    text = text.strip()
    if text.lower() == "none":
        return None
    comps = []
    for part in text.split(","):
        pieces = part.strip().split(":")
        if len(pieces) != 3:
            raise ValueError(f"mixture component {part!r} is not weight:mean:std")
        w = _parse_number(pieces[0])
        mean = tuple(_parse_number(v) for v in pieces[1].split("|"))
        s0 = _parse_number(pieces[2])
        comps.append(MixtureComponent(w, mean, s0))
    return tuple(comps)


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.I
    l: int = 1
    delta_g: float = 0.0
    e: float = 0.0185
    n_max: int = 100
    delta_c: float = 1.0 / 3072.0
    shape: tuple[int, ...] = (3, 32, 32)
    mixture: tuple[MixtureComponent, ...] | None = (
        MixtureComponent(1.0, (0.0,), 1.0),
    )
    steps: int = 40
    T: float = 80.0
    epsilon: float = 1e-6
    rho: float = 7.0
    quantize_levels: int = 0
    quantize_lo: float = -1.0
    quantize_hi: float = 1.0
    master_seed: int = 0
    nonce: bytes = field(default=b"\x00" * NONCE_BYTES)

    def __post_init__(self):
        if not self.shape or any(int(d) < 1 for d in self.shape):
            raise ValueError(f"shape must be positive integers, got {self.shape}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 < self.epsilon < self.T:
            raise ValueError(f"need 0 < epsilon < T, got ({self.epsilon}, {self.T})")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.quantize_levels not in (0,) and self.quantize_levels < 2:
            raise ValueError("quantize_levels must be 0 (off) or >= 2")
        if not self.quantize_lo < self.quantize_hi:
            raise ValueError("quantize_lo must be below quantize_hi")
        if len(self.nonce) != NONCE_BYTES:
            raise ValueError(f"nonce must be {NONCE_BYTES} bytes")
        if self.mixture is not None:
            for comp in self.mixture:
                if len(comp.mean) not in (1, self.k):
                    raise ValueError(
                        f"mixture mean has {len(comp.mean)} entries; "
                        f"expected 1 or {self.k}"
                    )
        # validate codec-side scalars and base interval feasibility now
        codec = self.codec_config(b"\x00" * KEY_BYTES)
        interval_geometry(codec.mode, codec.l, codec.delta_g)
        # and the mixture invariants (weights, stds)
        self.mixture_spec()

    @property
    def k(self) -> int:
        return int(np.prod(self.shape))

    @property
    def capacity_bits(self) -> int:
        return self.k * self.l

    @property
    def pixels(self) -> int:
        """Denominator of bits-per-pixel: trailing two dims, or k if flat."""
        return int(np.prod(self.shape[-2:])) if len(self.shape) >= 2 else self.k

    def codec_config(self, key: bytes) -> CodecConfig:
        return CodecConfig(
            mode=self.mode, l=self.l, delta_g=self.delta_g, e=self.e,
            n_max=self.n_max, delta_c=self.delta_c, key=key,
            master_seed=self.master_seed,
        )

    def scheduler(self) -> Scheduler:
        return default_scheduler(self.T, self.epsilon)

    def time_grid(self) -> TimeGrid:
        return build_time_grid(self.steps, self.scheduler(), self.rho)

    def mixture_spec(self) -> GaussianMixtureSpec | None:
        if self.mixture is None:
            return None
        k = self.k
        weights = np.array([c.weight for c in self.mixture])
        means = np.vstack([
            np.full(k, c.mean[0]) if len(c.mean) == 1 else np.asarray(c.mean)
            for c in self.mixture
        ])
        s0 = np.array([c.s0 for c in self.mixture])
        return GaussianMixtureSpec(weights, means, s0)

    def score_fn(self):
        spec = self.mixture_spec()
        return zero_score if spec is None else spec.score()

    def with_overrides(self, items: dict[str, str]) -> "RunConfig":
        return replace(self, **{k: _CONVERTERS[k](v) for k, v in items.items()})

    @classmethod
    def from_items(cls, items: dict[str, str]) -> "RunConfig":
        unknown = set(items) - set(_CONVERTERS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _CONVERTERS[k](v) for k, v in items.items()})

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        items: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in items:
                raise ValueError(f"line {lineno}: duplicate key {key!r}")
            items[key] = value.strip()
        return cls.from_items(items)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


_CONVERTERS = {
    "mode": lambda v: Mode(v.strip().upper()),
    "l": lambda v: int(v),
    "delta_g": _parse_number,
    "e": _parse_number,
    "n_max": lambda v: int(v),
    "delta_c": _parse_number,
    "shape": lambda v: tuple(int(d) for d in v.split(",")),
    "mixture": _parse_mixture,
    "steps": lambda v: int(v),
    "T": _parse_number,
    "epsilon": _parse_number,
    "rho": _parse_number,
    "quantize_levels": lambda v: int(v),
    "quantize_lo": _parse_number,
    "quantize_hi": _parse_number,
    "master_seed": lambda v: int(v),
    "nonce": lambda v: bytes.fromhex(v),
}

CONFIG_KEYS = tuple(_CONVERTERS)

assert set(CONFIG_KEYS) == {f.name for f in fields(RunConfig)}
