"""Config parsing and validation for the batch runner.

Configs are single JSON documents with nested blocks.  Validation is
strict: unknown keys anywhere are errors, and every (L, M) pair the
run would touch is checked (evenness, M < L) before any computation
starts.  All failures raise ConfigError, which the CLI maps to exit
code 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import (
    JumpKernel,
    KernelDensity,
    density_kernel,
    meanfield_kernel,
    mixture_kernel,
    uniform_kernel,
)

FAMILIES = ("uniform", "density", "mixture", "meanfield")


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    return raw


def check_keys(block: dict, allowed: set[str], context: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {context}: {', '.join(sorted(unknown))}"
        )


def get_block(cfg: dict, key: str, context: str) -> dict:
    if key not in cfg:
        raise ConfigError(f"{context} requires a '{key}' block")
    block = cfg[key]
    if not isinstance(block, dict):
        raise ConfigError(f"'{key}' in {context} must be an object")
    return block


def get_int(block: dict, key: str, context: str, minimum: int | None = None) -> int:
    if key not in block:
        raise ConfigError(f"{context} requires '{key}'")
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"'{key}' in {context} must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"'{key}' in {context} must be >= {minimum}, got {v}")
    return v


def get_number(block: dict, key: str, context: str, default: float | None = None) -> float:
    if key not in block:
        if default is None:
            raise ConfigError(f"{context} requires '{key}'")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{key}' in {context} must be a number, got {v!r}")
    return float(v)


def get_number_list(block: dict, key: str, context: str) -> list[float]:
    if key not in block:
        raise ConfigError(f"{context} requires '{key}'")
    v = block[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"'{key}' in {context} must be a nonempty list")
    out = []
    for item in v:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"'{key}' in {context} must contain numbers, got {item!r}")
        out.append(float(item))
    return out


def require_even(value: int, what: str) -> int:
    if value < 2 or value % 2 != 0:
        raise ConfigError(f"{what} must be a positive even integer, got {value}")
    return value


def even_ceil(x: float) -> int:
    """Smallest even integer >= ceil(x); the documented rounding rule for
    derived ranges like M = even_ceil(L**0.8)."""
    m = int(math.ceil(x))
    return m + (m % 2)


def torus_sides(cfg: dict, context: str) -> list[int]:
    block = get_block(cfg, "torus", context)
    check_keys(block, {"L"}, f"{context}.torus")
    if "L" not in block or not isinstance(block["L"], list) or not block["L"]:
        raise ConfigError(f"{context}.torus requires a nonempty 'L' list")
    sides = []
    for v in block["L"]:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{context}.torus L entries must be integers, got {v!r}")
        sides.append(require_even(v, f"{context}.torus L entry"))
    return sides


# ---------------------------------------------------------------------------
# Kernel blocks

_DENSITY_REGISTRY = {
    "constant": lambda u1, u2: np.ones_like(np.asarray(u1, dtype=np.float64)),
    "quartic": lambda u1, u2: 1.0 + (u1**2) * (u2**2),
    "gaussian": lambda u1, u2: np.exp(-4.0 * (u1**2 + u2**2)),
}


@dataclass(frozen=True)
class KernelPlan:
    """Parsed kernel block; ranges may be derived from L at build time."""

    family: str
    M: int | None = None
    M_exponent: float | None = None
    c: float | None = None
    density: str | None = None
    q0: KernelPlan | None = None

    def resolve_M(self, L: int) -> int:
        if self.family == "meanfield":
            return L
        if self.M is not None:
            return self.M
        M = even_ceil(L**self.M_exponent)
        require_even(M, f"derived range even_ceil(L**{self.M_exponent})")
        return M

    def validate_for(self, L: int) -> None:
        """The runner's gate: configured ranges must be even and < L."""
        require_even(L, "torus side")
        if self.family == "meanfield":
            return
        M = self.resolve_M(L)
        require_even(M, "kernel range")
        if M >= L:
            raise ConfigError(
                f"kernel range {M} must be smaller than the torus side {L}"
            )
        if self.q0 is not None:
            q0_M = self.q0.resolve_M(L)
            if q0_M > M:
                raise ConfigError(
                    f"mixture base range {q0_M} exceeds the mixture range {M}"
                )

    def build(self, L: int) -> JumpKernel:
        return self.build_with_M(self.resolve_M(L))

    def build_with_M(self, M: int) -> JumpKernel:
        if self.family == "meanfield":
            return meanfield_kernel(M)
        if self.family == "uniform":
            return uniform_kernel(M)
        if self.family == "density":
            fn = _DENSITY_REGISTRY[self.density]
            return density_kernel(M, KernelDensity(fn, label=self.density))
        base = self.q0.build_with_M(self.q0.resolve_M(M))
        return mixture_kernel(self.c, M, base)

    def label(self) -> str:
        if self.family == "density":
            return f"density:{self.density}"
        if self.family == "mixture":
            return f"mixture(c={self.c}, q0={self.q0.label()})"
        return self.family


def parse_kernel_block(
    block: dict, context: str, ranged: bool = True, allow_meanfield: bool = True
) -> KernelPlan:
    """ranged=False parses a family template whose M comes from elsewhere
    (the conditions command's M ladder)."""
    if not isinstance(block, dict):
        raise ConfigError(f"{context} must be an object")
    family = block.get("family")
    if family not in FAMILIES:
        raise ConfigError(
            f"{context} requires 'family' in {FAMILIES}, got {family!r}"
        )
    if family == "meanfield":
        if not allow_meanfield:
            raise ConfigError(f"{context}: the meanfield family is not valid here")
        check_keys(block, {"family"}, context)
        return KernelPlan(family=family)

    allowed = {"family"}
    if ranged:
        allowed |= {"M", "M_exponent"}
    if family == "density":
        allowed.add("density")
    if family == "mixture":
        allowed |= {"c", "q0"}
    check_keys(block, allowed, context)

    M = None
    M_exp = None
    if ranged:
        if ("M" in block) == ("M_exponent" in block):
            raise ConfigError(f"{context} requires exactly one of 'M' or 'M_exponent'")
        if "M" in block:
            M = require_even(get_int(block, "M", context), f"'M' in {context}")
        else:
            M_exp = get_number(block, "M_exponent", context)
            if not 0.0 < M_exp <= 1.0:
                raise ConfigError(
                    f"'M_exponent' in {context} must lie in (0, 1], got {M_exp}"
                )

    density = None
    if family == "density":
        density = block.get("density")
        if density not in _DENSITY_REGISTRY:
            raise ConfigError(
                f"'density' in {context} must be one of "
                f"{sorted(_DENSITY_REGISTRY)}, got {density!r}"
            )

    c = None
    q0 = None
    if family == "mixture":
        c = get_number(block, "c", context)
        if not 0.0 < c < 1.0:
            raise ConfigError(f"'c' in {context} must lie in (0, 1), got {c}")
        q0 = parse_kernel_block(
            get_block(block, "q0", context),
            f"{context}.q0",
            ranged=True,
            allow_meanfield=False,
        )
        if q0.M is None:
            raise ConfigError(f"{context}.q0 requires a fixed 'M'")
    return KernelPlan(family=family, M=M, M_exponent=M_exp, c=c, density=density, q0=q0)


def mc_block(cfg: dict, context: str) -> tuple[int, int | None, int, int]:
    """(replicates, seed-or-None, chunk_size, step_cap) from the mc block."""
    block = get_block(cfg, "mc", context)
    check_keys(block, {"replicates", "seed", "chunk_size", "step_cap"}, f"{context}.mc")
    replicates = get_int(block, "replicates", f"{context}.mc", minimum=2)
    seed = None
    if "seed" in block:
        seed = get_int(block, "seed", f"{context}.mc", minimum=0)
    chunk = block.get("chunk_size", 4096)
    if isinstance(chunk, bool) or not isinstance(chunk, int) or chunk < 1:
        raise ConfigError(f"'chunk_size' in {context}.mc must be a positive integer")
    step_cap = block.get("step_cap", 10**10)
    if isinstance(step_cap, bool) or not isinstance(step_cap, int) or step_cap < 1:
        raise ConfigError(f"'step_cap' in {context}.mc must be a positive integer")
    return replicates, seed, chunk, step_cap
