"""Command-line entry point: ``lflts {run,converge,scan,coeffs,compare}``.

Options come from an optional flat ``key = value`` file (``--config``) and
from flags; flags win.  Every command writes a CSV (to ``output`` or stdout)
and, with ``plot = true``, an SVG rendered from that CSV alone.

Exit codes: 0 ok, 2 configuration error, 3 numerical blowup,
4 failed assertion (only with ``assert = true``).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .chebstab import NU_MAX, P_MAX, coefficients
from .experiments import (PULSE_T_MAX, SCENARIOS, Scenario, build_space, convergenceStudy,
                          get_scenario, pulse_exact)
from .integrators import VARIANTS, IntegratorConfig, run, stabilityScan
from .mesh import RegionSpec, buildLocallyRefined

logger = logging.getLogger(__name__)

COMMANDS = ("run", "converge", "scan", "coeffs", "compare")
CONFIG_KEYS = ("scenario", "variant", "weighting", "c_s", "h_list", "p", "nu",
               "courant", "T", "output", "plot", "assert")
REQUIRED = {
    "run": ("scenario", "h_list"),
    "converge": ("scenario", "h_list"),
    "compare": ("scenario", "h_list"),
    "scan": ("scenario", "h_list"),
    "coeffs": ("p",),
}
EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_ASSERT = 0, 2, 3, 4

# accepted slope bands (L2, H1) per scenario and weighting, used by --assert
EXPECTED_SLOPES = {
    ("gaussian-pulse", "abrupt"): ((1.8, 2.2), None),
    ("gaussian-pulse", "weighted"): ((1.8, 2.2), None),
    ("shifted-inside", "abrupt"): (None, (1.8, 2.2)),
    ("shifted-inside", "weighted"): (None, (1.8, 2.2)),
    ("shifted-across", "abrupt"): (None, (1.3, 1.7)),
    ("shifted-across", "weighted"): (None, (1.8, 2.2)),
    ("shifted-outside", "abrupt"): (None, (1.8, 2.2)),
    ("shifted-outside", "weighted"): (None, (1.8, 2.2)),
    ("constant-solution", "abrupt"): ((1.8, 2.2), (1.3, 1.7)),
    ("constant-solution", "weighted"): ((1.8, 2.2), (1.8, 2.2)),
}
COMPARE_RATIO_BAND = (0.2, 0.5)
SCAN_COURANTS = np.round(np.arange(0.05, 1.5001, 0.05), 10)
SCAN_DEFAULT_T = 5.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: Optional[str] = None
    variant: str = "lflts"
    weighting: Optional[str] = None
    c_s: Optional[float] = None
    h_list: Tuple[float, ...] = ()
    p: Optional[int] = None
    nu: Tuple[float, ...] = (0.01,)
    courant: Optional[float] = None
    T: Optional[float] = None
    output: Optional[str] = None
    plot: bool = False
    check: bool = False

    def build_scenario(self) -> Scenario:
        over = {}
        if self.p is not None:
            over["p"] = self.p
        if self.command not in ("scan",):
            over["nu"] = self.nu[0]
        for key in ("weighting", "c_s", "courant", "T"):
            val = getattr(self, key)
            if val is not None:
                over[key] = val
        return get_scenario(self.scenario, **over)


# -- parsing -------------------------------------------------------------------

def _floats(key, text) -> Tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key}: expected at least one number")
    return vals


def _float(key, text) -> float:
    vals = _floats(key, text)
    if len(vals) != 1:
        raise ConfigError(f"{key}: expected a single number, got {text!r}")
    return vals[0]


def _bool(key, text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {text!r}")


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}; allowed: {', '.join(CONFIG_KEYS)}")
        out[key] = val
    return out


def parseConfig(command: str, file_values: Optional[dict] = None,
                flag_values: Optional[dict] = None) -> RunConfig:
    """Merge file and flag values (flags win), apply defaults and validate."""
    raw = dict(file_values or {})
    raw.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}; allowed: {', '.join(CONFIG_KEYS)}")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    missing = [k for k in REQUIRED[command] if k not in raw]
    if missing:
        raise ConfigError(f"{command}: missing required key(s): {', '.join(missing)}")

    kw = {"command": command}
    if "scenario" in raw:
        if raw["scenario"] not in SCENARIOS:
            raise ConfigError(f"scenario: unknown {raw['scenario']!r}; allowed: {', '.join(SCENARIOS)}")
        kw["scenario"] = raw["scenario"]
    if "variant" in raw:
        if raw["variant"] not in VARIANTS:
            raise ConfigError(f"variant: must be one of {', '.join(VARIANTS)}, got {raw['variant']!r}")
        kw["variant"] = raw["variant"]
    if "weighting" in raw:
        w = str(raw["weighting"]).strip()
        if w.startswith("weighted(") and w.endswith(")"):
            kw["c_s"] = _float("weighting", w[len("weighted("):-1])
            w = "weighted"
        if w not in ("abrupt", "weighted"):
            raise ConfigError(f"weighting: must be 'abrupt', 'weighted' or 'weighted(c_s)', got {w!r}")
        kw["weighting"] = w
    if "c_s" in raw:
        kw["c_s"] = _float("c_s", raw["c_s"])
    if kw.get("c_s") is not None and not kw["c_s"] > 0:
        raise ConfigError(f"c_s: must be > 0, got {kw['c_s']}")
    if "h_list" in raw:
        hs = _floats("h_list", raw["h_list"])
        if any(not h > 0 for h in hs):
            raise ConfigError(f"h_list: values must be > 0, got {hs}")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError(f"h_list: values must be strictly decreasing, got {hs}")
        kw["h_list"] = hs
    if "p" in raw:
        p = _float("p", raw["p"])
        if p != int(p) or not 1 <= p <= P_MAX:
            raise ConfigError(f"p: must be an integer in [1, {P_MAX}], got {raw['p']!r}")
        kw["p"] = int(p)
    if "nu" in raw:
        nus = _floats("nu", raw["nu"])
        if any(not 0.0 <= nu <= NU_MAX for nu in nus):
            raise ConfigError(f"nu: values must lie in [0, {NU_MAX}], got {nus}")
        if len(nus) > 1 and command not in ("scan", "coeffs"):
            raise ConfigError(f"nu: {command} takes a single value, got {nus}")
        kw["nu"] = nus
    if "courant" in raw:
        c = _float("courant", raw["courant"])
        if not 0 < c <= 2:
            raise ConfigError(f"courant: must lie in (0, 2], got {c}")
        kw["courant"] = c
    if "T" in raw:
        T = _float("T", raw["T"])
        if not T > 0:
            raise ConfigError(f"T: must be > 0, got {T}")
        kw["T"] = T
    if "output" in raw:
        kw["output"] = str(raw["output"])
    if "plot" in raw:
        kw["plot"] = _bool("plot", raw["plot"])
    if "assert" in raw:
        kw["check"] = _bool("assert", raw["assert"])
    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.plot and not cfg.output:
        raise ConfigError("plot: needs an output path")
    if cfg.command == "coeffs" or cfg.scenario is None:
        return
    if cfg.command == "run" and len(cfg.h_list) != 1:
        raise ConfigError(f"h_list: run takes a single mesh size, got {cfg.h_list}")
    try:
        sc = cfg.build_scenario()
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if sc.exact is pulse_exact and not sc.uses_reference and sc.T > PULSE_T_MAX:
        raise ConfigError(f"T: must be <= {PULSE_T_MAX} for {sc.name}, got {sc.T}")
    for h in cfg.h_list:
        try:
            buildLocallyRefined(RegionSpec(sc.domain, h, sc.fine_interval, sc.p))
        except ValueError as err:
            raise ConfigError(f"h_list: h={h} not usable for {sc.name}: {err}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lflts", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value file")
    ap.add_argument("--scenario")
    ap.add_argument("--variant")
    ap.add_argument("--weighting")
    ap.add_argument("--c_s", "--c-s", dest="c_s")
    ap.add_argument("--h", "--h_list", dest="h_list", help="comma-separated coarse mesh sizes")
    ap.add_argument("--p")
    ap.add_argument("--nu", action="append", help="repeatable, or comma-separated")
    ap.add_argument("--courant")
    ap.add_argument("--T", dest="T")
    ap.add_argument("-o", "--output")
    ap.add_argument("--plot", nargs="?", const="true")
    ap.add_argument("--assert", dest="assert", nargs="?", const="true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


# -- output helpers ------------------------------------------------------------

def _g(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write_csv(cfg: RunConfig, header: Sequence[str], rows: List[Sequence], footer: str = "",
               path: Optional[str] = None) -> Optional[Path]:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _g(v) for v in r])
    text = buf.getvalue() + footer
    target = path or cfg.output
    if target is None:
        sys.stdout.write(text)
        return None
    target = Path(target)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as err:
        raise OSError(f"cannot write {target}: {err.strerror}") from None
    return target


def _read_csv(path) -> Tuple[List[str], np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    data = np.array([[float(v) if v else np.nan for v in r] for r in rows[1:]], dtype=float)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


def plot_csv(csv_path, svg_path=None) -> Path:
    """Render an SVG from a CSV written by this module (chosen by its header)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    svg_path = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    header, data = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    if header[0] == "h":
        for j, name in enumerate(header):
            if name.startswith("err"):
                ax.loglog(data[:, 0], data[:, j], "o-", label=name)
        ax.set_xlabel("h")
        ax.set_ylabel("relative error")
        ax.legend()
    elif header[0] == "x":
        ax.plot(data[:, 0], data[:, 1])
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    elif header[0] == "n":
        ax.plot(data[:, 1], data[:, header.index("energy")])
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
    elif header[0] == "dt_over_h":
        for j, name in enumerate(header):
            if name.startswith("stable"):
                ax.step(data[:, 0], data[:, j], where="mid", label=name)
        ax.set_xlabel("dt / h")
        ax.set_ylabel("stable")
        ax.legend()
    elif header[0] == "p":
        beta = data[:, header.index("value")]
        ax.plot(beta, ".")
        ax.set_ylabel("value")
    else:
        raise ValueError(f"no plot layout for header {header}")
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return svg_path


# -- commands ------------------------------------------------------------------

def _cmd_run(cfg: RunConfig) -> int:
    sc = cfg.build_scenario()
    h = cfg.h_list[0]
    t0 = time.perf_counter()
    n_total = int(np.floor(sc.T / sc.dt(h) + 0.5))
    space, res = solve_with_snapshots(sc, h, cfg.variant, range(n_total + 1))
    elapsed = time.perf_counter() - t0
    rows = []
    for n in sorted(res.snapshots):
        e = res.energies[n - 1] if 1 <= n <= len(res.energies) else None
        rows.append((n, n * sc.dt(h), space.norm(res.snapshots[n]), e))
    out = _write_csv(cfg, ["n", "t", "norm", "energy"], rows,
                     footer=f"# runtime_s={elapsed:.3f}\n")
    if cfg.output:
        field_path = Path(cfg.output).with_name(Path(cfg.output).stem + "_field.csv")
        _write_csv(cfg, ["x", "u"], space.to_csv_rows(res.u), path=str(field_path))
        if cfg.plot:
            plot_csv(out)
            plot_csv(field_path)
    if res.blowup:
        logger.error("blowup at step %d", res.blowup_step)
        print(f"blowup at step {res.blowup_step}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def solve_with_snapshots(sc: Scenario, h: float, variant: str, steps):
    space = build_space(sc, h)
    icfg = IntegratorConfig(dt=sc.dt(h), p=sc.p, nu=sc.nu, variant=variant)
    res = run(space, None, icfg, sc.u0, sc.v0, space.load_function(sc.source), sc.T,
              record_energy=True, snapshot_steps=steps)
    return space, res


def _slope_check(name, slope, band) -> bool:
    if band is None:
        return True
    ok = slope is not None and band[0] <= slope <= band[1]
    print(f"{'PASS' if ok else 'FAIL'} {name} slope {slope if slope is None else round(slope, 3)} "
          f"in [{band[0]}, {band[1]}]", file=sys.stderr)
    return ok


def _cmd_converge(cfg: RunConfig) -> int:
    sc = cfg.build_scenario()
    rep = convergenceStudy(sc, cfg.h_list, variant=cfg.variant)
    rows = [(r.h, r.dofs, r.err_l2, r.err_h1, f"{r.runtime:.3f}") for r in rep.rows]
    footer = ""
    if len(rep.rows) > 1:
        footer = f"# slope_L2={_g(rep.slope_l2)} slope_H1={_g(rep.slope_h1)}\n"
    out = _write_csv(cfg, ["h", "dofs", "errL2rel", "errH1rel", "runtime_s"], rows, footer)
    if cfg.plot:
        plot_csv(out)
    if any(r.blowup_step is not None for r in rep.rows):
        bad = [(r.h, r.blowup_step) for r in rep.rows if r.blowup_step is not None]
        print(f"blowup (h, step): {bad}", file=sys.stderr)
        return EXIT_BLOWUP
    if cfg.check:
        bands = EXPECTED_SLOPES.get((sc.name, sc.weighting), (None, None))
        ok = _slope_check("L2", rep.slope_l2, bands[0]) & _slope_check("H1", rep.slope_h1, bands[1])
        if not ok:
            return EXIT_ASSERT
    return EXIT_OK


def _cmd_compare(cfg: RunConfig) -> int:
    sc = cfg.build_scenario()
    t0 = time.perf_counter()
    a = convergenceStudy(sc, cfg.h_list, variant="lflts")
    b = convergenceStudy(sc, cfg.h_list, variant="split-lfc")
    rows, ratios = [], []
    for ra, rb in zip(a.rows, b.rows):
        ratio = ra.err_l2 / rb.err_l2
        ratios.append(ratio)
        rows.append((ra.h, ra.dofs, ra.err_l2, rb.err_l2, ratio, ra.err_h1, rb.err_h1,
                     f"{ra.runtime + rb.runtime:.3f}"))
    header = ["h", "dofs", "errL2_lflts", "errL2_split", "ratio_L2", "errH1_lflts",
              "errH1_split", "runtime_s"]
    logger.info("compare finished in %.1fs", time.perf_counter() - t0)
    out = _write_csv(cfg, header, rows)
    if cfg.plot:
        plot_csv(out)
    if any(r.blowup_step is not None for r in a.rows + b.rows):
        return EXIT_BLOWUP
    if cfg.check:
        lo, hi = COMPARE_RATIO_BAND
        ok = True
        for h, q in zip(cfg.h_list, ratios):
            good = lo <= q <= hi
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} h={h:g} ratio {q:.3f} in [{lo}, {hi}]", file=sys.stderr)
        if not ok:
            return EXIT_ASSERT
    return EXIT_OK


def _cmd_scan(cfg: RunConfig) -> int:
    sc = cfg.build_scenario()
    h = cfg.h_list[0]
    space = build_space(sc, h)
    T = cfg.T if cfg.T is not None else SCAN_DEFAULT_T
    dts = SCAN_COURANTS * h
    table = stabilityScan(space, dts, T, sc.p, nus=cfg.nu, variant=cfg.variant)
    header = ["dt_over_h", "dt"]
    for nu in cfg.nu:
        header += [f"stable_nu={_g(nu)}", f"blowup_step_nu={_g(nu)}"]
    rows = []
    for c, row in zip(SCAN_COURANTS, table):
        line = [float(c), row["dt"]]
        for nu in cfg.nu:
            line += [int(row[nu] is None), row[nu]]
        rows.append(line)
    out = _write_csv(cfg, header, rows)
    if cfg.plot:
        plot_csv(out)
    if cfg.check:
        ok = True
        for nu in cfg.nu:
            if nu == 0:
                continue
            limit = sc.courant_factor * np.exp(-nu)
            bad = [c for c, row in zip(SCAN_COURANTS, table) if c <= limit + 1e-12 and row[nu] is not None]
            good = not bad
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} nu={nu:g} stable for dt/h <= {limit:.4f}"
                  + ("" if good else f" (unstable at {bad})"), file=sys.stderr)
        if not ok:
            return EXIT_ASSERT
    return EXIT_OK


def _cmd_coeffs(cfg: RunConfig) -> int:
    rows = []
    ok = True
    for nu in cfg.nu:
        c = coefficients(cfg.p, nu)
        for kind, k, l, val in c.rows():
            rows.append((cfg.p, nu, kind, k, l, val))
        if cfg.check:
            good = abs(c.beta(0, 0) * c.delta - 1.0) <= 1e-14
            if nu == 0:
                good &= bool(np.all(c.gamma == 1.0)) and c.omega == 2.0 * cfg.p**2
                good &= all(c.beta(k, l) == 1.0 for k in range(c.p) for l in range(-1, c.p - k + 1)
                            if k + l >= 0)
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} coefficient identities p={cfg.p} nu={nu:g}",
                  file=sys.stderr)
    out = _write_csv(cfg, ["p", "nu", "kind", "k", "l", "value"], rows)
    if cfg.plot:
        plot_csv(out)
    return EXIT_OK if ok else EXIT_ASSERT


DISPATCH = {"run": _cmd_run, "converge": _cmd_converge, "compare": _cmd_compare,
            "scan": _cmd_scan, "coeffs": _cmd_coeffs}


def execute(cfg: RunConfig) -> int:
    return DISPATCH[cfg.command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: getattr(args, k) for k in CONFIG_KEYS}
    if flags["nu"] is not None:
        flags["nu"] = ",".join(flags["nu"])
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = parseConfig(args.command, file_values, flags)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return execute(cfg)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
