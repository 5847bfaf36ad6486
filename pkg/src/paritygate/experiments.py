"""Experiment orchestration: JSON config, sweeps, CSV output.

Four experiments are wired up: the two lossy GHZ fidelity sweeps (decay-time
grid and initial-state-error grid), the dissipation-free accuracy sweep over
the detuning ratio m, and the truth-table suite over all encoding families.
A regime report dumps the dispersive-validity diagnostics.

Rows stream to disk as they complete so an interrupted sweep keeps its
finished points.  Everything written to the primary CSV is deterministic;
wall-clock timings go to a ``.timing.csv`` sidecar so reruns of the same
config produce bitwise-identical result files.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import IntegratorConfig, evolve_schrodinger, ket_fidelity
from .encoding import EncodingFamily, EncodingFamilySpec, make_encoding, validate_encoding
from .errors import ConfigError
from .gate import GateSpec, verify_truth_table
from .ghz import GhzKind, build_scenario, prepare_full
from .hilbert import HilbertLayout
from .model import (
    GHZ,
    US,
    DecoherenceParams,
    HamiltonianTier,
    HamiltonianToggles,
    SystemParams,
    TargetCountParity,
    build_hamiltonian,
    check_regime,
    derive_detunings,
    effective_params,
    solve_coupling,
)

FLOAT_FORMAT = "{:.12g}"


class SweepExperiment(str, Enum):
    FIG6 = "fig6"
    FIG7 = "fig7"
    FIG8 = "fig8"
    TRUTH_TABLE = "truth_table"
    REGIME_REPORT = "regime_report"


@dataclass(frozen=True)
class Profile:
    name: str
    cavity_dims: tuple[int, ...]
    truth_table_dim: int
    kappa_inv_us: tuple[float, ...]
    T_us: tuple[float, ...]
    x: tuple[float, ...]
    m: tuple[int, ...]


PROFILES = {
    "smoke": Profile(
        name="smoke", cavity_dims=(4, 10, 10), truth_table_dim=18,
        kappa_inv_us=(20.0, 50.0, 100.0), T_us=(10.0, 20.0),
        x=(-0.1, 0.0, 0.1), m=(10, 20, 30),
    ),
    "reproduce": Profile(
        name="reproduce", cavity_dims=(5, 15, 15), truth_table_dim=20,
        kappa_inv_us=(20.0, 40.0, 60.0, 80.0, 100.0), T_us=(10.0, 15.0, 20.0),
        x=(-0.1, -0.05, 0.0, 0.05, 0.1), m=(10, 20, 30, 40, 50),
    ),
}


@dataclass(frozen=True)
class SweepSpec:
    experiment: SweepExperiment
    profile: str = "smoke"
    grids: dict = field(default_factory=dict)
    cavity_dims: tuple[int, ...] | None = None
    alpha: float = 1.1
    g_cross_scale: float = 0.01
    toggles: HamiltonianToggles = HamiltonianToggles(True, True)
    verify_convergence: bool = False
    output_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "experiment", SweepExperiment(self.experiment))
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile '{self.profile}'")
        dims = self.cavity_dims or PROFILES[self.profile].cavity_dims
        object.__setattr__(self, "cavity_dims", tuple(int(d) for d in dims))
        for d in self.cavity_dims:
            if d < 2:
                raise ConfigError("cavity truncations must be >= 2")
        for key, values in self.grids.items():
            if isinstance(values, Sequence) and len(values) == 0:
                raise ConfigError(f"grid '{key}' is empty")

    def grid(self, key: str) -> tuple:
        if key in self.grids:
            v = self.grids[key]
            return tuple(v) if isinstance(v, (list, tuple)) else (v,)
        return tuple(getattr(PROFILES[self.profile], key))


@dataclass
class ResultRow:
    coords: dict
    fidelity: float
    fidelity_at_max: float
    trace_drift: float
    runtime_s: float
    converged: bool

    def __post_init__(self):
        if not -1e-6 <= self.fidelity <= 1.0 + 1e-6:
            raise ConfigError(f"fidelity {self.fidelity} outside [0, 1]")


# ---------------------------------------------------------------------------
# configuration I/O
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str) -> object:
    if key not in mapping:
        raise ConfigError(f"missing key {key}")
    return mapping[key]


def _system_from_config(system: dict) -> SystemParams:
    omega_eg = float(_require(system, "omega_eg"))
    omega_fe = float(_require(system, "omega_fe"))
    omega_fg = float(_require(system, "omega_fg"))
    n = int(system.get("n_cavities", 3))
    omega_c = [float(_require(system, f"omega_c{j}")) for j in range(1, n + 1)]

    scale = max(abs(omega_fg), 1.0)
    if abs(omega_fg - (omega_eg + omega_fe)) > 1e-6 * scale:
        raise ConfigError(
            f"inconsistent qutrit frequencies: omega_fg = {omega_fg} but "
            f"omega_eg + omega_fe = {omega_eg + omega_fe}"
        )

    g1 = float(_require(system, "g1"))
    delta_1 = omega_fg - omega_c[0]
    if "coupling_rule" in system:
        rule = system["coupling_rule"]
        parity = TargetCountParity(_require(rule, "parity"))
        m = int(_require(rule, "m"))
        g = [g1]
        for wc in omega_c[1:]:
            delta_l = omega_fe - wc
            g.append(solve_coupling(parity, m, delta_1, delta_l))
    else:
        g = [g1]
        for j in range(2, n + 1):
            g.append(float(_require(system, f"g{j}")))

    g_prime = system.get("g_prime", "match")
    if g_prime == "match":
        g_prime_t = tuple(g)
    elif g_prime is None:
        g_prime_t = None
    else:
        g_prime_t = tuple(float(v) for v in g_prime)

    g_cross = None
    if "g_cross" in system:
        g_cross = {}
        for key, v in system["g_cross"].items():
            k, l = int(key[0]), int(key[1])
            g_cross[(k, l)] = float(v)
    elif "g_cross_scale" in system:
        gmax = max(g)
        g_cross = {(k, l): float(system["g_cross_scale"]) * gmax
                   for k in range(1, n + 1) for l in range(k + 1, n + 1)}

    params = SystemParams.from_ghz(
        omega_eg=omega_eg, omega_fe=omega_fe, omega_fg=omega_fg,
        omega_c=tuple(omega_c), g=tuple(g), g_prime=g_prime_t, g_cross=g_cross,
    )

    # cross-check any explicitly listed detunings against the derived ones
    if "detunings" in system:
        import warnings

        derived = derive_detunings(params)
        listed = system["detunings"]
        for j in range(1, n + 1):
            for key, got in ((f"delta{j}", derived.delta[j - 1]),
                             (f"delta{j}_prime", derived.delta_prime[j - 1])):
                if key in listed:
                    want = float(listed[key]) * GHZ
                    if abs(want - got) > 1e-6 * max(abs(want), GHZ):
                        raise ConfigError(
                            f"listed {key} = {listed[key]} GHz disagrees with derived "
                            f"{got / GHZ:.6g} GHz"
                        )
        for key in listed:
            if key.startswith("Delta_"):
                k, l = int(key[6]), int(key[7])
                want = float(listed[key]) * GHZ
                got = derived.cross[(k, l)]
                if abs(want - got) > 1e-6 * max(abs(want), GHZ):
                    warnings.warn(
                        f"listed crosstalk detuning {key} = {listed[key]} GHz differs "
                        f"from the value {got / GHZ:.6g} GHz derived from the cavity "
                        "frequencies; the derived value is used",
                        stacklevel=2,
                    )
    return params


def load_config(path: str | Path) -> tuple[SystemParams, DecoherenceParams, SweepSpec]:
    """Parse a JSON config into parameter bundles (GHz/us -> rad/s / s)."""
    with open(path) as fh:
        data = json.load(fh)
    system = _require(data, "system")
    params = _system_from_config(system)

    dec_block = data.get("decoherence", {})
    T_us = float(dec_block.get("T_us", 10.0))
    kappa_inv_us = float(dec_block.get("kappa_inv_us", 20.0))
    dec = DecoherenceParams.from_times(T_us * US, kappa_inv_us * US, params.n_cavities)

    sweep_block = dict(data.get("sweep", {}))
    experiment = sweep_block.pop("experiment", "fig6")
    profile = sweep_block.pop("profile", "smoke")
    alpha = float(sweep_block.pop("alpha", 1.1))
    output = sweep_block.pop("output", None)
    truncations = sweep_block.pop("truncations", None)
    verify = bool(sweep_block.pop("verify_convergence", False))
    toggles = HamiltonianToggles(
        unwanted_couplings=bool(sweep_block.pop("unwanted_couplings", True)),
        crosstalk=bool(sweep_block.pop("crosstalk", True)),
    )
    spec = SweepSpec(
        experiment=experiment, profile=profile, grids=sweep_block,
        cavity_dims=None if truncations is None else tuple(truncations),
        alpha=alpha, g_cross_scale=float(system.get("g_cross_scale", 0.01)),
        toggles=toggles, verify_convergence=verify, output_path=output,
    )
    return params, dec, spec


def bundled_config_path(name: str = "table1") -> Path:
    return Path(__file__).parent / "configs" / f"{name}.json"


# ---------------------------------------------------------------------------
# sweep execution
# ---------------------------------------------------------------------------


def standard_family_specs(alpha: float = 1.1, squeeze_r: float = 0.4
                          ) -> dict[str, EncodingFamilySpec]:
    """One canonical parameter choice per encoding family."""
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    return {
        "fock01": EncodingFamilySpec(EncodingFamily.FOCK01),
        "fock_pair": EncodingFamilySpec(EncodingFamily.FOCK_PAIR, m=1, n=1),
        "fock_superposition": EncodingFamilySpec(
            EncodingFamily.FOCK_SUPERPOSITION,
            even_coeffs=(inv_sqrt2, inv_sqrt2), odd_coeffs=(inv_sqrt2, -inv_sqrt2)),
        "cat_pair": EncodingFamilySpec(EncodingFamily.CAT_PAIR, alpha=alpha),
        "fock_cat_mix": EncodingFamilySpec(EncodingFamily.FOCK_CAT_MIX, alpha=alpha,
                                           m=0, n=0),
        "squeezed_vs_cat": EncodingFamilySpec(EncodingFamily.SQUEEZED_VS_CAT,
                                              r=squeeze_r, alpha=alpha),
        "multicomponent_cat": EncodingFamilySpec(EncodingFamily.MULTICOMPONENT_CAT,
                                                 alpha=alpha),
    }


def _integrator_config(spec: SweepSpec) -> IntegratorConfig:
    return IntegratorConfig(verify_convergence=spec.verify_convergence)


def _ghz_layout(spec: SweepSpec) -> HilbertLayout:
    return HilbertLayout(cavity_dims=spec.cavity_dims)


def _fig6_point(params: SystemParams, spec: SweepSpec, T_us: float, kappa_inv_us: float,
                x: float = 0.0) -> ResultRow:
    start = time.perf_counter()
    layout = _ghz_layout(spec)
    dec = DecoherenceParams.from_times(T_us * US, kappa_inv_us * US, params.n_cavities)
    scenario = build_scenario(GhzKind.SPIN_COHERENT, layout, alpha=spec.alpha, x=x)
    _, traj = prepare_full(scenario, params, dec, spec.toggles, _integrator_config(spec))
    coords = {"T_us": T_us, "kappa_inv_us": kappa_inv_us}
    if spec.experiment is SweepExperiment.FIG7:
        coords = {"x": x, "kappa_inv_us": kappa_inv_us, "T_us": T_us}
    return ResultRow(
        coords=coords,
        fidelity=traj.meta["fidelity_final"],
        fidelity_at_max=traj.meta["fidelity_at_max"],
        trace_drift=traj.meta["trace_drift"],
        runtime_s=time.perf_counter() - start,
        converged=bool(traj.meta["converged"]),
    )


def fig8_params(m: int, g1_ghz: float = 0.16) -> SystemParams:
    """Parameters with delta_1/g_1 = m, the target detunings 0.4 and 0.8 GHz
    above delta_1, and couplings solved for the even branch."""
    g1 = g1_ghz * GHZ
    delta_1 = m * g1
    omega_fg = 20.0 * GHZ
    omega_fe = 12.0 * GHZ
    omega_c = (omega_fg - delta_1,
               omega_fe - (delta_1 + 0.4 * GHZ),
               omega_fe - (delta_1 + 0.8 * GHZ))
    g2 = solve_coupling(TargetCountParity.EVEN, m, delta_1, delta_1 + 0.4 * GHZ)
    g3 = solve_coupling(TargetCountParity.EVEN, m, delta_1, delta_1 + 0.8 * GHZ)
    params = SystemParams(omega_eg=omega_fg - omega_fe, omega_fe=omega_fe,
                          omega_fg=omega_fg, omega_c=omega_c, g=(g1, g2, g3),
                          g_prime=(g1, g2, g3))
    return params.with_uniform_crosstalk(0.01 * params.g_max)


def _fig8_point(spec: SweepSpec, m: int, crosstalk: bool) -> ResultRow:
    start = time.perf_counter()
    params = fig8_params(m)
    layout = _ghz_layout(spec)
    detunings = derive_detunings(params)
    eff = effective_params(params, detunings)
    t_gate = math.pi / eff.chi[0]
    scenario = build_scenario(GhzKind.SPIN_COHERENT, layout, alpha=spec.alpha, x=0.0)
    hamiltonian = build_hamiltonian(
        HamiltonianTier.FULL, params, detunings, layout,
        HamiltonianToggles(unwanted_couplings=False, crosstalk=crosstalk))
    target = scenario.target_full

    def fid(state, t):
        return ket_fidelity(state, target)

    psi, traj = evolve_schrodinger(hamiltonian, scenario.initial, t_gate,
                                   _integrator_config(spec), {"fidelity": fid})
    fids = traj.records["fidelity"]
    return ResultRow(
        coords={"m": m, "crosstalk": int(crosstalk)},
        fidelity=float(fids[-1]),
        fidelity_at_max=float(np.max(fids)),
        trace_drift=traj.meta["norm_drift"],
        runtime_s=time.perf_counter() - start,
        converged=bool(traj.meta["converged"]),
    )


def _truth_table_point(spec: SweepSpec, family: str, n: int) -> ResultRow:
    start = time.perf_counter()
    dim = PROFILES[spec.profile].truth_table_dim
    enc_spec = standard_family_specs(alpha=spec.alpha)[family]
    enc = make_encoding(enc_spec, dim)
    gate_spec = GateSpec.exact_conditions(tuple(enc for _ in range(n)))
    table, max_dev = verify_truth_table(gate_spec)
    ok = table.matches_controlled_phase(tol=1e-9)
    return ResultRow(
        coords={"family": family, "n": n},
        fidelity=1.0 - max_dev,
        fidelity_at_max=1.0 - max_dev,
        trace_drift=0.0,
        runtime_s=time.perf_counter() - start,
        converged=bool(ok and max_dev <= 1e-9),
    )


def run_experiment(spec: SweepSpec, params: SystemParams, dec: DecoherenceParams,
                   jobs: int = 1, writer: "IncrementalCsvWriter | None" = None
                   ) -> list[ResultRow]:
    """Run every grid point in deterministic grid order.

    ``jobs > 1`` dispatches points to a process pool; rows are still emitted
    in grid order.  Unconverged points are flagged, never dropped.
    """
    tasks = list(_point_tasks(spec, params, dec))
    if jobs <= 1:
        rows = []
        for fn, args in tasks:
            row = fn(*args)
            rows.append(row)
            if writer is not None:
                writer.append(row)
        return rows

    from concurrent.futures import ProcessPoolExecutor

    rows = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *args) for fn, args in tasks]
        emitted = 0
        for i, fut in enumerate(futures):
            rows[i] = fut.result()
            while emitted < len(tasks) and rows[emitted] is not None:
                if writer is not None:
                    writer.append(rows[emitted])
                emitted += 1
    return rows  # type: ignore[return-value]


def _point_tasks(spec: SweepSpec, params: SystemParams, dec: DecoherenceParams):
    exp = spec.experiment
    if exp is SweepExperiment.FIG6:
        for T in spec.grid("T_us"):
            for kinv in spec.grid("kappa_inv_us"):
                yield _fig6_point, (params, spec, float(T), float(kinv), 0.0)
    elif exp is SweepExperiment.FIG7:
        T = float(spec.grid("T_us")[0])
        for kinv in spec.grid("kappa_inv_us"):
            for x in spec.grid("x"):
                yield _fig6_point, (params, spec, T, float(kinv), float(x))
    elif exp is SweepExperiment.FIG8:
        crosstalk_variants = (False, True) if spec.toggles.crosstalk else (False,)
        for m in spec.grid("m"):
            for ct in crosstalk_variants:
                yield _fig8_point, (spec, int(m), ct)
    elif exp is SweepExperiment.TRUTH_TABLE:
        families = spec.grids.get("families") or sorted(standard_family_specs())
        for family in families:
            for n in spec.grids.get("n", (2, 3)):
                yield _truth_table_point, (spec, str(family), int(n))
    else:
        raise ConfigError(f"experiment {exp} has a dedicated runner")


def regime_report_rows(params: SystemParams) -> list[dict]:
    detunings = derive_detunings(params)
    eff = effective_params(params, detunings)
    report = check_regime(params, detunings, eff)
    return [
        {"quantity": name, "value": value, "flagged": int(name in report.flagged)}
        for name, value in sorted(report.ratios.items())
    ]


def encoding_report_rows(specs: dict[str, EncodingFamilySpec], dim: int) -> list[dict]:
    rows = []
    for name in sorted(specs):
        enc = make_encoding(specs[name], dim)
        rep = validate_encoding(enc)
        rows.append({
            "family": name, "dim": dim,
            "parity_residual_even": rep.parity_residual_even,
            "parity_residual_odd": rep.parity_residual_odd,
            "overlap": rep.overlap,
            "norm_even": rep.norm_even, "norm_odd": rep.norm_odd,
            "tail_even": rep.tail_even, "tail_odd": rep.tail_odd,
            "passed": int(rep.passed),
        })
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return FLOAT_FORMAT.format(v)
    return str(v)


def _row_fields(row: ResultRow) -> list[tuple[str, object]]:
    fields = list(row.coords.items())
    fields += [
        ("fidelity", row.fidelity),
        ("fidelity_at_max", row.fidelity_at_max),
        ("trace_drift", row.trace_drift),
        ("converged", row.converged),
    ]
    return fields


class IncrementalCsvWriter:
    """Append rows as they finish; the header comes from the first row.

    The primary file holds only deterministic fields; wall-clock runtimes
    stream to ``<path>.timing.csv``.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.timing_path = self.path.with_suffix(self.path.suffix + ".timing.csv")
        self._main = None
        self._timing = None

    def append(self, row: ResultRow) -> None:
        fields = _row_fields(row)
        if self._main is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._main = open(self.path, "w")
            self._timing = open(self.timing_path, "w")
            self._main.write(",".join(name for name, _ in fields) + "\n")
            coord_names = [name for name, _ in row.coords.items()]
            self._timing.write(",".join(coord_names + ["runtime_s"]) + "\n")
        self._main.write(",".join(_format_value(v) for _, v in fields) + "\n")
        self._main.flush()
        self._timing.write(",".join(
            [_format_value(v) for v in row.coords.values()]
            + [f"{row.runtime_s:.3f}"]) + "\n")
        self._timing.flush()

    def close(self) -> None:
        if self._main is not None:
            self._main.close()
            self._timing.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_results(rows: Sequence[ResultRow], path: str | Path) -> None:
    """One-shot CSV write; floats carry 12 significant digits."""
    if not rows:
        raise ConfigError("no rows to write")
    with IncrementalCsvWriter(path) as writer:
        for row in rows:
            writer.append(row)


def write_plain_csv(rows: Sequence[dict], path: str | Path) -> None:
    if not rows:
        raise ConfigError("no rows to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(row[name]) for name in names) + "\n")
