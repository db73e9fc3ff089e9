"""Command line entry point: ``tcmkit {analyze,montecarlo,fig2,sweep}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .connection import (
    PoleDecomposition,
    connection_poles_many,
    decompose,
    sum_rule_residual,
)
from .errors import TcmError, ValidationError
from .genfunc import coeff_matrix
from .laurent_berry import (
    ContourSpec,
    berry_phase_full,
    berry_winding,
    c0_analytic,
    c0_residues,
    cauchy_coeff,
    classify_poles,
)
from .scaling import (
    omega_average_numeric,
    omega_averaged_times,
    small_t_c0,
    small_t_c0_intermediate,
    small_t_poles,
)
from .scenarios import angles, find_peaks_periodic, random_model, two_level
from .spectrum import Deterministic, Exponential, Gamma, Spectrum, Uniform, decay_factors
from .tcm import tcm_element, tcm_mc_batch

EXIT_ERROR = 2
EXIT_MC_OUTLIER = 3
SIGMA_LIMIT = 5.0


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Level(_Strict):
    energy: float
    overlap_re: float
    overlap_im: float = 0.0


class ModelConfig(_Strict):
    preset: Literal["two-level", "random", "inline"] = "inline"
    levels: Optional[list[Level]] = None
    lambda1_re: float = 1 / math.sqrt(3)
    lambda1_im: float = 1 / math.sqrt(3)
    q_mag: float = 0.5
    n: int = Field(3, ge=2, le=8)

    @model_validator(mode="after")
    def _levels_match_preset(self):
        if self.preset == "inline" and not self.levels:
            raise ValueError("inline model needs a non-empty 'levels' list")
        if self.preset != "inline" and self.levels is not None:
            raise ValueError(f"'levels' not allowed with preset {self.preset!r}")
        return self


class DistributionConfig(_Strict):
    kind: Literal["exponential", "gamma", "uniform", "deterministic"]
    mean: Optional[float] = None
    shape: Optional[float] = None
    scale: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    tau0: Optional[float] = None

    def build(self):
        need = {
            "exponential": ("mean",),
            "gamma": ("shape", "scale"),
            "uniform": ("a", "b"),
            "deterministic": ("tau0",),
        }[self.kind]
        given = {k for k in ("mean", "shape", "scale", "a", "b", "tau0") if getattr(self, k) is not None}
        if given != set(need):
            raise ValidationError(f"{self.kind} distribution takes exactly {list(need)}, got {sorted(given)}")
        cls = {"exponential": Exponential, "gamma": Gamma, "uniform": Uniform, "deterministic": Deterministic}
        return cls[self.kind](*(getattr(self, k) for k in need))


class ContourConfig(_Strict):
    center_re: float = 0.0
    center_im: float = 0.0
    radius: float = Field(gt=0)
    samples: int = 512

    def build(self) -> ContourSpec:
        return ContourSpec(complex(self.center_re, self.center_im), self.radius, self.samples)


class SweepConfig(_Strict):
    omega_points: int = Field(1024, ge=1)
    t_values: list[float] = Field(default_factory=lambda: [1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001])

    @field_validator("t_values")
    @classmethod
    def _t_range(cls, v):
        if not v:
            raise ValueError("t_values must not be empty")
        if any(not (0 < t <= 1) for t in v):
            raise ValueError("t values must lie in (0, 1]")
        return v


class MonteCarloConfig(_Strict):
    n_samples: int = Field(100_000, ge=100)
    pairs: Optional[list[tuple[int, int]]] = None
    workers: int = Field(1, ge=1)

    @field_validator("pairs")
    @classmethod
    def _pairs(cls, v):
        if v is not None and (not v or any(k < 1 or kp < 1 for k, kp in v)):
            raise ValueError("pairs must be a non-empty list of [k, k'] with k, k' >= 1")
        return v


def mc_sigmas(mean: complex, std_error: float, exact: complex) -> float:
    """Deviation in standard errors; the error is floored at rounding level."""
    floor = 64 * np.finfo(float).eps * max(1.0, abs(exact))
    return abs(mean - exact) / max(std_error, floor)


DEFAULT_PAIRS = [(k, kp) for k in (1, 2, 3, 5, 8) for kp in (1, 3, 4, 7)]


class RunConfig(_Strict):
    model: ModelConfig
    distribution: Optional[DistributionConfig] = None
    modulus: float = Field(0.7, gt=0, le=1)
    contours: list[ContourConfig] = Field(default_factory=list)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    montecarlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    seed: int = 0
    output: Optional[str] = None

    @model_validator(mode="after")
    def _distribution_matches(self):
        if self.model.preset == "two-level" and self.distribution is not None:
            raise ValueError("the two-level preset is given by lambda1; no distribution allowed")
        if self.model.preset == "inline" and self.distribution is None:
            raise ValueError("inline models need a distribution")
        return self


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config must be a mapping")
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ValidationError(f"{loc}: {first['msg']}") from exc


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


class Built:
    def __init__(self, decay, overlaps, spectrum=None, distribution=None):
        self.decay = decay
        self.overlaps = np.asarray(overlaps, dtype=complex)
        self.spectrum = spectrum
        self.distribution = distribution


def build_model(cfg: RunConfig, pole_analysis: bool) -> Built:
    m = cfg.model
    if m.preset == "two-level":
        tl = two_level(complex(m.lambda1_re, m.lambda1_im), m.q_mag)
        return Built(tl.decay, tl.overlaps)
    if m.preset == "random":
        if cfg.distribution is not None:
            raise ValidationError("the random preset draws its own exponential distribution")
        rm = random_model(m.n, cfg.seed)
        return Built(rm.decay, rm.spectrum.overlaps, rm.spectrum, rm.distribution)
    spec = Spectrum([lv.energy for lv in m.levels], [complex(lv.overlap_re, lv.overlap_im) for lv in m.levels])
    if pole_analysis:
        spec.validate(pole_analysis=True)
    dist = cfg.distribution.build()
    return Built(decay_factors(spec, dist, strict=pole_analysis), spec.overlaps, spec, dist)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_json(path: Path, data) -> None:
    def conv(o):
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        return _jsonable(o)

    write_atomic(path, json.dumps(conv(data), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _default_contours(decomp: PoleDecomposition) -> list[ContourSpec]:
    """A circle enclosing everything, plus one just outside the zeros when that excludes some ``1/lam``."""
    zr = np.abs(decomp.zeros)
    lr = np.abs(decomp.lambda_poles)
    big = 1.5 * float(max(zr.max(), lr.max()))
    out = [ContourSpec(0.0, big, 512)]
    inner = float(zr.max())
    gap = lr[lr > inner]
    if gap.size:
        radius = 0.5 * (inner + gap.min())
        out.append(ContourSpec(0.0, radius, _nodes_for(max(inner / radius, radius / gap.min()))))
    return out


def _nodes_for(ratio: float, digits: float = 14.0) -> int:
    # trapezoid error decays like ratio**M for the nearest singularity
    m = digits * math.log(10) / -math.log(ratio)
    return int(min(1 << 16, max(512, 1 << math.ceil(math.log2(m)))))


def _sub(decomp):
    return decomp.modulus >= 1.0


def run_analyze(cfg: RunConfig, out: Path, convergence_check: bool = False) -> int:
    built = build_model(cfg, pole_analysis=True)
    r = cfg.modulus
    decomp = decompose(built.decay, built.overlaps, r)
    N = decomp.dimension
    sub = _sub(decomp)

    rows = [("lambda", p.real, p.imag, 1.0, 0.0) for p in decomp.lambda_poles]
    rows += [("zero", p.real, p.imag, s.real, s.imag) for p, s in zip(decomp.zeros, decomp.sensitivities)]
    write_csv(out / "poles.csv", ["family", "re", "im", "sensitivity_re", "sensitivity_im"], rows)

    w = angles(cfg.sweep.omega_points)
    z = r * np.exp(1j * w)
    vals = connection_poles_many(decomp, z, subtract_classical=sub)
    cl = 0.0 if sub else 1.0 / (1.0 - r * r)
    write_csv(
        out / "connection.csv",
        ["omega", "re", "im", "re_minus_classical"],
        [(a, v.real, v.imag, v.real - cl) for a, v in zip(w, vals)],
    )

    coeffs = coeff_matrix(built.decay, built.overlaps)
    contours = [c.build() for c in cfg.contours] or _default_contours(decomp)
    winding_contour = _default_contours(decomp)[0]
    c0_rows = []
    for c in contours:
        cls = classify_poles(decomp, c, z0=0.0)
        entry = {
            "center": c.center,
            "radius": c.radius,
            "samples": c.samples,
            "enclosed_lambda": list(cls.enclosed_lambda),
            "enclosed_zeros": list(cls.enclosed_zeros),
            "c0_quadrature": cauchy_coeff(
                lambda zz: connection_poles_many(decomp, zz, subtract_classical=sub),
                c,
                0,
                z0=0.0,
                poles=decomp.all_poles(),
                convergence_check=convergence_check,
            ),
            "c0_residues": c0_residues(decomp, cls, subtract_classical=sub) if cls.z0_enclosed else None,
        }
        try:
            entry["c0_closed_form"] = c0_analytic(r, cls, built.decay.lam, 0.0, subtract_classical=sub)
        except TcmError:
            entry["c0_closed_form"] = None
        if cls.z0_enclosed:
            entry["berry_phase_full"] = berry_phase_full(built.decay, built.overlaps, r, c, subtract_classical=sub)
        c0_rows.append(entry)

    summary = {
        "N": N,
        "P_N": float(np.sum(np.abs(built.overlaps) ** 2)),
        "modulus": r,
        "classical_subtracted": sub,
        "sensitivity_sum": complex(np.sum(decomp.sensitivities)),
        "sum_rule_residual": sum_rule_residual(decomp.sensitivities, N),
        "berry_winding": berry_winding(coeffs, r, winding_contour, zeros=decomp.zeros),
        "winding_contour_radius": winding_contour.radius,
        "contours": c0_rows,
    }
    write_json(out / "summary.json", summary)
    return 0


def run_montecarlo(cfg: RunConfig, out: Path, convergence_check: bool = False) -> int:
    built = build_model(cfg, pole_analysis=False)
    if built.spectrum is None:
        raise ValidationError("Monte Carlo needs a spectrum and a waiting-time distribution")
    mc = cfg.montecarlo
    pairs = [tuple(p) for p in (mc.pairs or DEFAULT_PAIRS)]
    est = tcm_mc_batch(built.spectrum, built.distribution, pairs, mc.n_samples, cfg.seed, workers=mc.workers)
    rows = []
    worst = 0.0
    for (k, kp), e in zip(pairs, est):
        exact = tcm_element(built.decay, built.overlaps, k, kp)
        sig = mc_sigmas(e.mean, e.std_error, exact)
        worst = max(worst, sig)
        rows.append((str(k), str(kp), exact.real, exact.imag, e.mean.real, e.mean.imag, e.std_error, sig))
    write_csv(
        out / "mc.csv",
        ["k", "k_prime", "closed_re", "closed_im", "mc_re", "mc_im", "std_error", "sigmas"],
        rows,
    )
    if worst > SIGMA_LIMIT:
        print(f"error: MonteCarloOutlier: max deviation {worst:.2f} sigma exceeds {SIGMA_LIMIT:g}", file=sys.stderr)
        return EXIT_MC_OUTLIER
    return 0


def fig2_curve(cfg: RunConfig):
    if cfg.model.preset != "two-level":
        raise ValidationError("fig2 requires the two-level preset")
    if cfg.sweep.omega_points < 1024:
        raise ValidationError("fig2 needs at least 1024 angles")
    built = build_model(cfg, pole_analysis=True)
    decomp = decompose(built.decay, built.overlaps, 1.0)
    w = angles(cfg.sweep.omega_points)
    vals = connection_poles_many(decomp, np.exp(1j * w), subtract_classical=True)
    return w, vals


def run_fig2(cfg: RunConfig, out: Path, convergence_check: bool = False) -> int:
    w, vals = fig2_curve(cfg)
    write_csv(out / "fig2.csv", ["omega", "value_re", "value_im"], [(a, v.real, v.imag) for a, v in zip(w, vals)])
    peaks = find_peaks_periodic(np.abs(vals))
    write_csv(out / "fig2_peaks.csv", ["omega", "abs_value"], [(w[i], abs(vals[i])) for i in peaks])
    return 0


def run_sweep(cfg: RunConfig, out: Path, convergence_check: bool = False) -> int:
    built = build_model(cfg, pole_analysis=False)
    r = cfg.modulus
    if r >= 1:
        raise ValidationError("sweep needs |z| < 1 (classical term diverges at |z| = 1)")
    header = [
        "t",
        "z_plus_re",
        "z_plus_im",
        "z_minus_re",
        "z_minus_im",
        "c0_small_t_re",
        "c0_small_t_im",
        "c0_intermediate_re",
        "c0_intermediate_im",
        "transition_re",
        "transition_im",
        "correlation",
        "transition_numeric_re",
        "transition_numeric_im",
        "correlation_numeric",
    ]
    rows = []
    for t in cfg.sweep.t_values:
        pt = small_t_poles(built.overlaps, built.decay, t, r)
        c0 = small_t_c0(pt)
        ci = small_t_c0_intermediate(pt)
        tr, co = omega_averaged_times(pt)
        ntr, nco = omega_average_numeric(built.decay, built.overlaps, t, r, cfg.sweep.omega_points)
        rows.append(
            (t, pt.z_plus.real, pt.z_plus.imag, pt.z_minus.real, pt.z_minus.imag, c0.real, c0.imag,
             ci.real, ci.imag, tr.real, tr.imag, co.real, ntr.real, ntr.imag, nco.real)
        )
    write_csv(out / "sweep.csv", header, rows)
    return 0


COMMANDS = {"analyze": run_analyze, "montecarlo": run_montecarlo, "fig2": run_fig2, "sweep": run_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcmkit", description="Time correlation matrix analysis")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--convergence-check", action="store_true", help="double quadrature nodes and compare")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        out = args.out or (Path(cfg.output) if cfg.output else Path("."))
        return COMMANDS[args.command](cfg, Path(out), args.convergence_check)
    except TcmError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
