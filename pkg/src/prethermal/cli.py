"""Command-line scenario runner.

Subcommands: ``spectrum``, ``evolve``, ``sweep-alpha``, ``entropy-scaling``
and ``reproduce-paper``. Settings come from an optional JSON config file
(validated against ``schema/config.schema.json``) and flags override it.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import acceptance, dynamics as dy, equilibria as eq, liouvillian as lv
from . import measures as ms, spinops as so
from ._core import BACKEND
from .bathmodel import RateSet, SpatialModel, spatial_correlation

# ----------------------------------------------------------------- config


def load_schema() -> dict:
    text = resources.files("prethermal").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: str = "spectrum"
    n_spins: int = 2
    beta_omega0: float = math.log(9.0)
    R1: float = 1.0
    alpha: float | None = None
    spatial: dict | None = None
    initial_state: dict = field(default_factory=lambda: {"preset": "mixed"})
    model: str = "full"
    integrator: dict = field(default_factory=dict)
    plateau: dict = field(default_factory=dict)
    alphas: list = field(default_factory=lambda: [0.0, 0.5, 0.9, 0.99, 0.999, 0.9999, 1.0])
    n_range: list = field(default_factory=lambda: [1, 30])
    zero_tol: float = 1e-9
    adr_threshold: float = 0.01
    seed: int = 0
    out: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        jsonschema.validate(data, load_schema())
        cfg = cls(**data)
        if cfg.alpha is not None or cfg.spatial is not None:
            cfg.rates()  # physical constraints are checked at parse time
        cfg.integrator_config()
        if cfg.initial_state.get("preset") == "dicke" and not {"J", "M"} <= set(cfg.initial_state):
            raise ValueError("the dicke preset needs J and M")
        return cfg

    def to_dict(self) -> dict:
        # unset optional fields are omitted so the result validates again
        return {k: v for k, v in asdict(self).items() if v is not None}

    def resolved_alpha(self) -> float:
        if self.spatial is not None:
            sp = self.spatial
            model = SpatialModel(sp["kind"], sp.get("alpha_fixed", 1.0))
            return spatial_correlation(model, sp["r"], sp["xi"], sp.get("omega", 1.0))
        if self.alpha is None:
            raise ValueError("this experiment needs alpha (--alpha) or a spatial model")
        return float(self.alpha)

    def rates(self, alpha: float | None = None) -> RateSet:
        a = self.resolved_alpha() if alpha is None else alpha
        return RateSet.from_beta_omega0(self.beta_omega0, a, self.R1)

    def integrator_config(self) -> dy.IntegratorConfig:
        return dy.IntegratorConfig(**self.integrator)

    def initial_rho(self, n_spins: int | None = None) -> np.ndarray:
        n = self.n_spins if n_spins is None else n_spins
        st = self.initial_state
        if "matrix" in st:
            arr = np.array(st["matrix"], dtype=float)
            rho = arr[..., 0] + 1j * arr[..., 1]
            if so.validate_density_matrix(rho) != n:
                raise ValueError("initial matrix does not match n_spins")
            return rho
        return so.preset_state(st.get("preset", "mixed"), n, st.get("J"), st.get("M"),
                               st.get("copy", 1))


def read_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def build_config(args, experiment: str) -> ScenarioConfig:
    data = read_config(args.config)
    data["experiment"] = experiment
    for key in ("n_spins", "beta_omega0", "alpha", "zero_tol", "adr_threshold", "seed", "out",
                "model"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "initial", None):
        data["initial_state"] = {"preset": args.initial}
    if getattr(args, "t_max", None) is not None:
        data.setdefault("integrator", {})["t_max"] = args.t_max
    if getattr(args, "log_time", False):
        data.setdefault("integrator", {})["spacing"] = "log"
    if getattr(args, "alphas", None):
        data["alphas"] = args.alphas
    if getattr(args, "n_range", None):
        data["n_range"] = args.n_range
    return ScenarioConfig.from_dict(data)


# ---------------------------------------------------------------- outputs

def _outdir(cfg: ScenarioConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


GNUPLOT_TRAJECTORY = """# gnuplot -p {name}.gp
set datafile separator ','
set key autotitle columnhead
set xlabel 't R1'
{logscale}
plot for [c in '{columns}'] '{name}.csv' using 1:(column(c)) with lines title c
"""

GNUPLOT_XY = """# gnuplot -p {name}.gp
set datafile separator ','
set key autotitle columnhead
set xlabel '{xlabel}'
set ylabel '{ylabel}'
{logscale}
plot '{name}.csv' using 1:2 with linespoints
"""


# ----------------------------------------------------------------- regime

@dataclass(frozen=True)
class RegimeReport:
    n_spins: int
    alpha: float
    zero_count: int
    adr: float
    gap_ratio: float
    classification: str
    conserved_pairs: int
    steady_state_family: str
    zero_tol: float


def classify(zero_count: int, adr: float, R1: float, adr_threshold: float) -> str:
    """Integrable with several zero modes, nearly integrable when the only
    decaying gap is below ``adr_threshold * R1``, otherwise non-integrable."""
    if zero_count > 1:
        return "integrable"
    if adr < adr_threshold * R1:
        return "nearly-integrable"
    return "non-integrable"


def _family(cls: str, n: int) -> str:
    if cls == "integrable":
        return "generalized-gibbs" if n == 2 else "block-thermal"
    if cls == "nearly-integrable":
        return "prethermal-then-gibbs"
    return "gibbs"


def regime_report(cfg: ScenarioConfig, alpha: float | None = None):
    rates = cfg.rates(alpha)
    L = lv.build_liouvillian(cfg.n_spins, rates)
    rep = lv.spectrum(L, cfg.zero_tol * L.fro_norm)
    pairs = lv.count_conserved(lv.conserved_quantity_rates(L)) if cfg.n_spins > 1 else 0
    cls = classify(rep.zero_count, rep.adr, rates.R1, cfg.adr_threshold)
    reg = RegimeReport(cfg.n_spins, rates.alpha, rep.zero_count, rep.adr, rep.gap_ratio, cls,
                       pairs, _family(cls, cfg.n_spins), rep.zero_tol)
    return reg, rep


# --------------------------------------------------------------- commands

def cmd_spectrum(cfg: ScenarioConfig) -> int:
    reg, rep = regime_report(cfg)
    out = _outdir(cfg)
    _write(out / "spectrum.json", _dump(rep.to_dict()))
    _write(out / "regime.json", _dump(asdict(reg)))
    print(f"N={reg.n_spins} alpha={reg.alpha:g}: zero_count={reg.zero_count} "
          f"adr={reg.adr:.6g} conserved_pairs={reg.conserved_pairs} -> {reg.classification}")
    return 0


def _trajectory(cfg: ScenarioConfig) -> dy.Trajectory:
    rates = cfg.rates()
    icfg = cfg.integrator_config()
    rho0 = cfg.initial_rho()
    if cfg.model == "full":
        L = lv.build_liouvillian(cfg.n_spins, rates)
        ref = ms.purity(eq.gibbs_state(cfg.n_spins, cfg.beta_omega0))
        return dy.evolve_full(L, rho0, icfg, metadata={"reference_final": ref})
    obs = so.extract_observables(rho0)
    if cfg.model in ("two_spin_reduced", "two_spin_nine"):
        if cfg.n_spins != 2:
            raise ValueError(f"{cfg.model} needs n_spins = 2")
        system = "eq13" if cfg.model == "two_spin_reduced" else "nine"
        traj = dy.evolve_two_spin_reduced(rates, obs, icfg, system)
        traj.metadata["reference_final"] = ms.purity_analytic("lt1", cfg.beta_omega0)
        return traj
    if cfg.n_spins != 3:
        raise ValueError("three_spin_reduced needs n_spins = 3")
    return dy.evolve_three_spin_reduced(rates, obs, icfg)


def cmd_evolve(cfg: ScenarioConfig) -> int:
    traj = _trajectory(cfg)
    out = _outdir(cfg)
    _write(out / "trajectory.csv", traj.to_csv())
    _write(out / "trajectory.json", traj.to_json(indent=1, sort_keys=True) + "\n")
    log = "set logscale x" if cfg.integrator.get("spacing") == "log" else ""
    cols = " ".join(c for c in traj.columns()[1:] if c in ("Mz", "Mzz", "Mc", "purity"))
    _write(out / "trajectory.gp", GNUPLOT_TRAJECTORY.format(name="trajectory", columns=cols,
                                                           logscale=log))
    pcfg = {"signal": "purity", "delta": 0.01, "eps": None, **cfg.plateau}
    try:
        rep = dy.detect_plateau(traj, pcfg["signal"], pcfg["eps"], pcfg["delta"], cfg.R1)
    except (KeyError, ValueError) as exc:
        print(f"plateau detection skipped: {exc}")
        rep = None
    if rep is not None:
        _write(out / "plateau.json", _dump(rep.to_dict()))
        if rep.detected:
            tail = " (stable)" if rep.stable else f", T_1={rep.t_1:.4g}"
            print(f"plateau in {rep.signal}: value={rep.plateau_value:.6g} final={rep.final_value:.6g} "
                  f"T_pre={rep.t_pre:.4g} T_R={rep.t_R:.4g}{tail}")
        else:
            print(f"no plateau in {rep.signal}; final value {rep.final_value:.6g}")
    print(f"wrote {len(traj)} samples to {out / 'trajectory.csv'}")
    return 0


def cmd_sweep_alpha(cfg: ScenarioConfig) -> int:
    with ThreadPoolExecutor() as pool:
        reports = list(pool.map(lambda a: regime_report(cfg, a)[0], cfg.alphas))
    lines = ["alpha,one_minus_alpha,zero_count,adr,classification"]
    for r in reports:
        lines.append(f"{r.alpha!r},{1 - r.alpha!r},{r.zero_count},{r.adr!r},{r.classification}")
    out = _outdir(cfg)
    _write(out / "adr_sweep.csv", "\n".join(lines) + "\n")
    _write(out / "adr_sweep.gp", GNUPLOT_XY.format(name="adr_sweep", xlabel="alpha",
                                                   ylabel="ADR / R1", logscale="set logscale y"))
    for r in reports:
        print(f"alpha={r.alpha:<8g} zero_count={r.zero_count:<3d} adr={r.adr:<12.6g} {r.classification}")
    return 0


def principal_block_entropy(n: int, rates: RateSet, icfg: dy.IntegratorConfig) -> float:
    """Steady entropy of the J = N/2 block started from all spins down."""
    J = n / 2
    P0 = np.zeros(n + 1)
    P0[-1] = 1.0  # all down is the top energy level M = +J
    traj = dy.evolve_collective(J, rates.A, rates.B, dy.BlockPopulations(J, P0), icfg)
    p = traj.final().P
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def cmd_entropy_scaling(cfg: ScenarioConfig) -> int:
    lo, hi = cfg.n_range
    rates = cfg.rates(1.0)
    icfg = replace(cfg.integrator_config(), t_max=max(cfg.integrator.get("t_max", 0), 200.0),
                   record_every=10.0, spacing="linear")
    thermal = ms.EntropyScalingResult("thermal_alpha_lt1")
    principal = ms.EntropyScalingResult("principal_block_alpha_eq1")
    for n in range(lo, hi + 1):
        if n <= 5:
            s = ms.von_neumann_entropy(eq.gibbs_state(n, cfg.beta_omega0))
        else:
            s = ms.entropy_analytic_thermal(n, cfg.beta_omega0)
        thermal.add(n, s)
        principal.add(n, principal_block_entropy(n, rates, icfg))
    out = _outdir(cfg)
    body = thermal.to_csv() + "".join(principal.to_csv().splitlines(True)[1:])
    _write(out / "entropy_scaling.csv", body)
    _write(out / "entropy_scaling.gp", GNUPLOT_XY.format(
        name="entropy_scaling", xlabel="N", ylabel="S", logscale=""))
    limit = ms.entropy_analytic_principal(cfg.beta_omega0)
    print(f"thermal slope {thermal.slope():.6g} per spin; principal block S(N={hi}) = "
          f"{principal.points[-1][1]:.6g}, large-N limit {limit:.6g}")
    return 0


def cmd_reproduce_paper(cfg: ScenarioConfig) -> int:
    settings = acceptance.Settings(zero_tol=cfg.zero_tol, seed=cfg.seed,
                                   alpha_integrable=cfg.alpha if cfg.alpha is not None else 1.0)
    results = acceptance.run_all(settings)
    print(acceptance.table(results))
    print()
    for r in results:
        print(r.line())
    out = _outdir(cfg)
    report = [{"criterion": r.number, "title": r.title, "passed": r.passed, "error": r.error,
               "checks": [{k: (v if isinstance(v, (int, float, str, bool)) or v is None else str(v))
                           for k, v in asdict(c).items()} for c in r.checks]}
              for r in results]
    _write(out / "acceptance.json", _dump(report))
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "sweep-alpha": cmd_sweep_alpha,
    "entropy-scaling": cmd_entropy_scaling,
    "reproduce-paper": cmd_reproduce_paper,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prethermal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s ({BACKEND} kernels)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--zero-tol", type=float, dest="zero_tol",
                        help="zero-eigenvalue tolerance relative to ||L||_F (default 1e-9)")
    common.add_argument("--adr-threshold", type=float, dest="adr_threshold",
                        help="nearly-integrable cutoff in units of R1 (default 0.01)")
    common.add_argument("--seed", type=int, help="seed for randomised checks")
    common.add_argument("--n-spins", type=int, dest="n_spins")
    common.add_argument("--beta-omega0", type=float, dest="beta_omega0")
    common.add_argument("--alpha", type=float)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="spectrum, ADR and regime")
    p = sub.add_parser("evolve", parents=[common], help="time evolution and plateau report")
    p.add_argument("--initial", choices=so.PRESETS)
    p.add_argument("--model", choices=["full", "two_spin_reduced", "two_spin_nine",
                                       "three_spin_reduced"])
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--log-time", action="store_true", dest="log_time",
                   help="sample on a logarithmic time grid")
    p = sub.add_parser("sweep-alpha", parents=[common], help="ADR and regime against alpha")
    p.add_argument("--alphas", type=float, nargs="+")
    p = sub.add_parser("entropy-scaling", parents=[common], help="steady entropy against N")
    p.add_argument("--n-range", type=int, nargs=2, dest="n_range", metavar=("LO", "HI"))
    sub.add_parser("reproduce-paper", parents=[common], help="run the reference checks")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args, args.command)
    except (jsonschema.ValidationError, ValueError, OSError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"invalid configuration: {msg}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except dy.IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
