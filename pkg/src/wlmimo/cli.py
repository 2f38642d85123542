"""Experiment runner: YAML config in, deterministic CSV curves out.

Each experiment writes one CSV per curve plus a metadata sidecar
(`<experiment>-meta.yaml`) recording the seed, trial counts, a hash of the
normalized config, the package version, and the list of files produced.
Identical config and seed always reproduce byte-identical CSVs: every
curve draws from its own stream derived from (seed, experiment, curve id),
so curves never perturb each other and can run in any order.

Config keys may be written kebab-case or snake_case; they are normalized
before use and before hashing.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .link_model import LinkConfig
from .mmtc_sim import MmtcConfig, half_tti_mode, run_scenario
from .montecarlo import derive_rng, wilson_interval
from .outage_analysis import asymptote_curve, gain_for, outage_mc
from .receivers import ReceiverSpec
from .wishart_asymptotics import beta1, diversity_exponent, sample_kth_eigenvalue

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "normalize_options",
    "config_hash",
    "parse_receiver",
    "list_experiments",
    "run",
    "main",
    "EXPERIMENTS",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and normalized experiment description."""

    experiment: str
    seed: int = 1234
    trials: int | None = None    # None = experiment-specific default
    out_dir: str = "."
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            known = ", ".join(sorted(EXPERIMENTS))
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; valid names: {known}"
            )
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be at least 1")


def normalize_options(obj):
    """Lower-case keys and turn hyphens into underscores, recursively."""
    if isinstance(obj, dict):
        out = {}
        for key, val in obj.items():
            if not isinstance(key, str):
                raise ConfigError(f"config keys must be strings, got {key!r}")
            out[key.strip().lower().replace("-", "_")] = normalize_options(val)
        return out
    if isinstance(obj, list):
        return [normalize_options(v) for v in obj]
    return obj


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML experiment config with field diagnostics on errors."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    norm = normalize_options(raw)
    known = {"experiment", "seed", "trials", "out_dir", "options"}
    extra = set(norm) - known
    if extra:
        raise ConfigError(f"{path}: unknown top-level fields {sorted(extra)}")
    if "experiment" not in norm:
        raise ConfigError(f"{path}: missing required field 'experiment'")
    options = norm.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError(f"{path}: 'options' must be a mapping")
    return ExperimentConfig(
        experiment=str(norm["experiment"]).strip().lower().replace("_", "-"),
        seed=int(norm.get("seed", 1234)),
        trials=None if norm.get("trials") is None else int(norm["trials"]),
        out_dir=str(norm.get("out_dir", ".")),
        options=options,
    )


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical (sorted-key) YAML form of the config.

    The output directory is deliberately left out: it changes where results
    land, not what they are.
    """
    doc = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "options": cfg.options,
    }
    canonical = yaml.safe_dump(doc, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_receiver(name: str) -> ReceiverSpec:
    """'wl-zf', 'cl-mmse-sic', ... -> ReceiverSpec."""
    parts = name.strip().lower().split("-")
    sic = parts[-1] == "sic"
    if sic:
        parts = parts[:-1]
    if len(parts) != 2:
        raise ConfigError(f"cannot parse receiver name {name!r}")
    return ReceiverSpec(family=parts[0], criterion=parts[1], sic=sic)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return str(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path.name


def _write_outage_csv(path: Path, curve) -> str:
    if curve.p_asym is None:
        header = ["snr_db", "p_out", "ci_lo", "ci_hi"]
        rows = zip(curve.snr_db, curve.p_out, curve.ci_lo, curve.ci_hi)
    else:
        header = ["snr_db", "p_out", "ci_lo", "ci_hi", "p_asym"]
        rows = zip(curve.snr_db, curve.p_out, curve.ci_lo, curve.ci_hi, curve.p_asym)
    return _write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

FIG1_CASES = ((1, 2, 4), (1, 3, 6), (1, 4, 4), (2, 2, 2))


def _run_fig1(cfg: ExperimentConfig, out: Path) -> list[str]:
    trials = cfg.trials or 1_000_000
    points = int(cfg.options.get("points", 8))
    files = []
    for k, n, m in FIG1_CASES:
        rng = derive_rng(cfg.seed, "fig1", k, n, m)
        lam = np.sort(sample_kth_eigenvalue(k, n, m, trials, rng))
        probs = np.logspace(-4, -2, points)
        eps = np.quantile(lam, probs)
        counts = np.searchsorted(lam, eps, side="right")
        cdf = counts / trials
        lo, hi = wilson_interval(counts, trials)
        d = diversity_exponent(k, n, m)
        if k == 1:
            intercept = beta1(n, m)
        else:
            # No closed-form constant beyond the smallest eigenvalue; show
            # the polynomial law with a fitted intercept instead.
            intercept = float(np.exp(np.mean(np.log(cdf) - d * np.log(eps))))
        asym = intercept * eps ** d
        rows = [
            (k, n, m, eps[i], cdf[i], lo[i], hi[i], asym[i])
            for i in range(len(eps))
        ]
        header = ["k", "n", "m", "epsilon", "cdf_emp", "ci_lo", "ci_hi", "cdf_asym"]
        files.append(_write_csv(out / f"fig1-k{k}-n{n}-m{m}.csv", header, rows))
    return files


DEFAULT_FIG2_RECEIVERS = ("wl-zf", "wl-mmse", "wl-zf-sic", "wl-mmse-sic")


def _run_fig2(cfg: ExperimentConfig, out: Path) -> list[str]:
    opt = cfg.options
    trials = cfg.trials or 100_000
    m = int(opt.get("m_rx", 2))
    n = int(opt.get("n_users", 4))
    rate = float(opt.get("rate", 2.0))
    snr_db = np.asarray(opt.get("snr_db", np.arange(15.0, 61.0, 5.0)), dtype=float)
    modes = list(opt.get("power_control", ["none", "ppc"]))
    names = list(opt.get("receivers", DEFAULT_FIG2_RECEIVERS))
    gain_trials = int(opt.get("gain_trials", 200_000))
    files = []
    for mode in modes:
        link = LinkConfig(m_rx=m, n_users=n, snr=1.0, rate=rate, power_control=mode)
        for name in names:
            rx = parse_receiver(name)
            gain = gain_for(link, rx, gain_trials,
                            derive_rng(cfg.seed, "fig2", mode, name, "gain"))
            curve = outage_mc(rx, link, snr_db, trials,
                              derive_rng(cfg.seed, "fig2", mode, name, "curve"),
                              gain=gain)
            files.append(_write_outage_csv(out / f"fig2-{mode}-{name}.csv", curve))
    return files


# (panel, WL users, CL users, rate); M = 2 receive antennas throughout.
FIG3_PANELS = (
    ("a", 2, 2, 2.0),
    ("b", 3, 2, 4.0),
    ("c", 3, 2, 0.3),
    ("d", 4, 2, 0.3),
)


def _run_fig3(cfg: ExperimentConfig, out: Path) -> list[str]:
    opt = cfg.options
    m = int(opt.get("m_rx", 2))
    snr_db = np.asarray(opt.get("snr_db", np.arange(10.0, 61.0, 2.0)), dtype=float)
    gain_trials = int(opt.get("gain_trials", 200_000))
    files = []
    for panel, n_wl, n_cl, rate in FIG3_PANELS:
        for family, n in (("wl", n_wl), ("cl", n_cl)):
            link = LinkConfig(m_rx=m, n_users=n, snr=1.0, rate=rate,
                              power_control="ppc")
            for criterion in ("zf", "mmse"):
                for sic in (False, True):
                    rx = ReceiverSpec(family, criterion, sic)
                    gain = gain_for(
                        link, rx, gain_trials,
                        derive_rng(cfg.seed, "fig3", panel, family,
                                   criterion, int(sic)),
                    )
                    p = asymptote_curve(gain, snr_db)
                    name = f"fig3-{panel}-{rx.label.lower()}.csv"
                    files.append(_write_csv(
                        out / name,
                        ["snr_db", "p_asym"],
                        zip(snr_db, p),
                    ))
    return files


def _geometric_grid(lo: int, hi: int) -> list[int]:
    """Ascending integer grid with roughly sqrt(2) steps, lo..hi inclusive."""
    grid = []
    j = 0
    while True:
        u = int(round(lo * 2 ** (j / 2.0)))
        if u > hi:
            break
        if not grid or u > grid[-1]:
            grid.append(u)
        j += 1
    return grid


MMTC_SCENARIOS = (("wl", False), ("cl", False), ("cl", True))


def _run_mmtc(cfg: ExperimentConfig, out: Path, prefix: str) -> list[str]:
    opt = cfg.options
    ttis = int(opt.get("ttis", 20_000))
    m_list = [int(v) for v in opt.get("m_rx", [1, 2])]
    if "user_grid" in opt:
        grid = [int(u) for u in opt["user_grid"]]
    else:
        grid = _geometric_grid(int(opt.get("users_lo", 250)),
                               int(opt.get("users_hi", 128_000)))
    header = ["users", "family", "half_tti", "drop_prob", "ci_lo", "ci_hi",
              "throughput"]
    files = []
    for m in m_list:
        for family, half in MMTC_SCENARIOS:
            base = MmtcConfig(users=grid[0], m_rx=m, family=family)
            if half:
                base = half_tti_mode(base)
            rows = []
            for users in grid:
                rng = derive_rng(cfg.seed, prefix, m, family, int(half), users)
                res = run_scenario(replace(base, users=users), ttis, rng)
                rows.append((
                    users, family, half,
                    res.drop_prob.value, res.drop_prob.ci_lo,
                    res.drop_prob.ci_hi, res.throughput.value,
                ))
            tag = f"{family}-half" if half else family
            files.append(_write_csv(out / f"{prefix}-{tag}-m{m}.csv", header, rows))
    return files


def _run_fig4(cfg: ExperimentConfig, out: Path) -> list[str]:
    return _run_mmtc(cfg, out, "fig4")


def _run_fig5(cfg: ExperimentConfig, out: Path) -> list[str]:
    # Same sweep as fig4; kept as a separate id so the drop-rate and
    # throughput plots can be reseeded independently of each other.
    return _run_mmtc(cfg, out, "fig5")


def _run_custom(cfg: ExperimentConfig, out: Path) -> list[str]:
    opt = cfg.options
    trials = cfg.trials or 100_000
    m = int(opt.get("m_rx", 2))
    n = int(opt.get("n_users", 4))
    rate = float(opt.get("rate", 2.0))
    mode = str(opt.get("power_control", "none"))
    snr_db = np.asarray(opt.get("snr_db", np.arange(15.0, 61.0, 5.0)), dtype=float)
    names = list(opt.get("receivers", ["wl-zf"]))
    gain_trials = int(opt.get("gain_trials", 200_000))
    with_asym = bool(opt.get("asymptote", True))
    link = LinkConfig(m_rx=m, n_users=n, snr=1.0, rate=rate, power_control=mode)
    files = []
    for name in names:
        rx = parse_receiver(name)
        gain = None
        if with_asym:
            gain = gain_for(link, rx, gain_trials,
                            derive_rng(cfg.seed, "custom", mode, name, "gain"))
        curve = outage_mc(rx, link, snr_db, trials,
                          derive_rng(cfg.seed, "custom", mode, name, "curve"),
                          gain=gain)
        files.append(_write_outage_csv(out / f"custom-{mode}-{name}.csv", curve))
    return files


EXPERIMENTS = {
    "fig1-eig-cdf": (
        _run_fig1,
        "empirical vs asymptotic CDF of the k-th smallest Wishart eigenvalue",
    ),
    "fig2-wl-outage": (
        _run_fig2,
        "WL receiver outage curves with asymptotes, with and without power control",
    ),
    "fig3-wl-vs-cl": (
        _run_fig3,
        "asymptotic outage of WL vs CL receivers across user loads and rates",
    ),
    "fig4-mmtc-drop": (
        _run_fig4,
        "machine-type traffic packet-drop sweep over the user population",
    ),
    "fig5-mmtc-throughput": (
        _run_fig5,
        "machine-type traffic throughput sweep over the user population",
    ),
    "custom": (
        _run_custom,
        "outage curve for a caller-chosen link scenario and receiver list",
    ),
}


def list_experiments() -> str:
    width = max(len(name) for name in EXPERIMENTS)
    lines = [f"{name:<{width}}  {desc}" for name, (_, desc) in sorted(EXPERIMENTS.items())]
    return "\n".join(lines)


def run(cfg: ExperimentConfig) -> list[str]:
    """Execute one experiment; returns the files written (CSVs + sidecar)."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner, _ = EXPERIMENTS[cfg.experiment]
    files = runner(cfg, out)
    meta = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "config_hash": config_hash(cfg),
        "version": _version(),
        "files": sorted(files),
    }
    meta_name = f"{cfg.experiment}-meta.yaml"
    with open(out / meta_name, "w", encoding="utf-8") as f:
        yaml.safe_dump(meta, f, sort_keys=True)
    return sorted(files) + [meta_name]


def _version() -> str:
    from . import __version__

    return __version__


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wlmimo",
        description="Run reproducible outage / machine-type-traffic experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list available experiments")
    runp = sub.add_parser("run", help="run an experiment from a YAML config")
    runp.add_argument("config", help="path to the YAML experiment config")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    runp.add_argument("--trials", type=int, default=None,
                      help="override the trial count")
    runp.add_argument("--out-dir", default=None,
                      help="override the output directory")
    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_experiments())
        return 0

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
        if args.out_dir is not None:
            cfg = replace(cfg, out_dir=args.out_dir)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    try:
        files = run(cfg)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return 1
    for name in files:
        print(name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
