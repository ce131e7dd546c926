"""Command line front end: ``kleindim {generate,estimate,verify,render}``.

Configuration is a flat ``key=value`` file (``#`` starts a comment); the
same pairs may follow the subcommand and override the file.  Exit status
is 0 on success, 1 when a verification check fails and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import _backend, synthetic, verify, wiggle
from .dimension import (FIT_HEADER, box_count, estimate_delta, kappa_fit, mdim_fit,
                        whitney_levels)
from .groups import GroupPresentation, parse_group
from .limitset import (BUILTIN_GROUPS, PointCloud, cloud_csv_text, cyclic_loxodromic,
                       packing_configuration, read_cloud_csv, render_svg, sample_limit_set,
                       uniformly_perfect)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2

GROUP_FAMILIES = ("cyclic-parabolic", "cyclic-loxodromic", "modular", "schottky4", "packing",
                  "gamma2")
SET_FAMILIES = ("snowflake", "cantor", "one-over-n", "segment", "circle", "two-points")
ESTIMATORS = ("mdim", "kappa", "delta", "beta0", "tsp-sum", "perfectness")


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


# ------------------------------------------------------------------ config

@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    out: Path = Path(".")

    @classmethod
    def parse(cls, text: str) -> dict:
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"line {n}: expected key=value, got {raw.strip()!r}")
            values[key.strip()] = val.strip()
        return values

    def digest(self) -> str:
        body = "".join(f"{k}={self.values[k]}\n" for k in sorted(self.values))
        body += f"seed={self.seed}\n"
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def has(self, key: str) -> bool:
        return key in self.values

    def str(self, key: str, default: Optional[str] = None) -> str:
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def int(self, key: str, default: Optional[int] = None) -> int:
        raw = self.str(key, None if default is None else str(default))
        try:
            v = float(raw)
        except ValueError:
            v = math.nan
        if not (math.isfinite(v) and v.is_integer()):
            _bad(key, raw, "an integer")
        return int(v)

    def float(self, key: str, default: Optional[float] = None) -> float:
        raw = self.str(key, None if default is None else repr(default))
        try:
            v = float(raw)
        except ValueError:
            _bad(key, raw, "a number")
        if not math.isfinite(v):
            _bad(key, raw, "a finite number")
        return v

    def floats(self, key: str, default: Optional[tuple] = None) -> Optional[tuple]:
        if key not in self.values:
            return default
        try:
            return tuple(float(x) for x in self.values[key].replace(",", " ").split())
        except ValueError:
            _bad(key, self.values[key], "a list of numbers")

    def names(self, key: str, default: str) -> list:
        return [x for x in self.str(key, default).replace(",", " ").split() if x]


def _bad(key, raw, what):
    raise ConfigError(f"{key}={raw!r} is not {what}")


def provenance_lines(cfg: RunConfig, command: str) -> list:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - running from a checkout
        version = "unknown"
    return [f"kleindim {command} version={version} config={cfg.digest()} seed={cfg.seed}",
            f"modules numpy={np.__version__} scipy={scipy.__version__} "
            f"kernels={_backend.BACKEND}"]


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / name
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _commented(lines, body: str) -> str:
    return "".join(f"# {x}\n" for x in lines) + body


def _svg_with_provenance(lines, svg: str) -> str:
    return "".join(f"<!-- {x} -->\n" for x in lines) + svg


# ------------------------------------------------------------------ inputs

def load_group(cfg: RunConfig) -> GroupPresentation:
    if cfg.has("group"):
        path = Path(cfg.str("group"))
        if not path.exists():
            raise ConfigError(f"group={str(path)!r}: no such file")
        try:
            return parse_group(path.read_text())
        except Exception as exc:
            raise ConfigError(f"group={str(path)!r}: {exc}") from exc
    family = cfg.str("family")
    if family not in GROUP_FAMILIES:
        raise ConfigError(f"family={family!r} is not a group family; "
                          f"choose from {', '.join(GROUP_FAMILIES)}")
    if family == "cyclic-loxodromic":
        return cyclic_loxodromic(cfg.float("multiplier", 2.0))
    return BUILTIN_GROUPS[family]()


def build_cloud(cfg: RunConfig) -> PointCloud:
    if cfg.has("input"):
        path = Path(cfg.str("input"))
        if not path.exists():
            raise ConfigError(f"input={str(path)!r}: no such file")
        return read_cloud_csv(path)
    if cfg.has("group"):
        return sample_limit_set(load_group(cfg), cfg.int("budget", 100_000),
                                method=cfg.str("method", "word-fixed-points"))
    family = cfg.str("family")
    if family == "snowflake":
        return wiggle.snowflake(wiggle.SnowflakeParams(cfg.float("beta", 0.3),
                                                       cfg.int("depth", 8)))
    if family == "cantor":
        return synthetic.cantor_set(cfg.int("depth", 12))
    if family == "one-over-n":
        return synthetic.one_over_n(cfg.int("n_max", 2 ** 16))
    if family == "segment":
        return synthetic.segment(2.0 ** -cfg.int("depth", 16))
    if family == "circle":
        return synthetic.circle(cfg.int("points", 4096))
    if family == "two-points":
        return synthetic.two_points(cfg.float("distance", 1.0))
    if family in GROUP_FAMILIES:
        return sample_limit_set(load_group(cfg), cfg.int("budget", 100_000),
                                method=cfg.str("method", "word-fixed-points"))
    raise ConfigError(f"family={family!r} is unknown; choose from "
                      f"{', '.join(GROUP_FAMILIES + SET_FAMILIES)}")


# -------------------------------------------------------------- commands

def cmd_generate(cfg: RunConfig) -> int:
    cloud = build_cloud(cfg)
    prov = provenance_lines(cfg, "generate")
    stem = cfg.str("name", cfg.str("family", "cloud"))
    _write(cfg, f"{stem}.csv", cloud_csv_text(cloud, prov))
    _write(cfg, f"{stem}.svg", _svg_with_provenance(prov, render_svg(cloud)))
    print(f"{len(cloud)} points, resolution {cloud.resolution:.3g}"
          + (", elementary" if cloud.elementary else "") + f" -> {cfg.out / stem}.csv")
    return EXIT_OK


def _row(name, value, stderr, window, flags) -> str:
    lo, hi = window
    return f"{name},{value!r},{stderr!r},{lo!r},{hi!r},0,{';'.join(flags)}"


def _estimate_one(name: str, cfg: RunConfig, cloud_fn) -> str:
    if name == "mdim":
        return mdim_fit(box_count(cloud_fn()), window=cfg.floats("mdim_window")).csv_row()
    if name == "kappa":
        return kappa_fit(whitney_levels(cloud_fn()), window=cfg.floats("kappa_window")).csv_row()
    if name == "delta":
        window = cfg.floats("delta_window", (8.0, 24.0))
        if len(window) != 2:
            _bad("delta_window", cfg.str("delta_window"), "two numbers")
        return estimate_delta(load_group(cfg), window, cfg.int("delta_points", 2_000_000))[0].csv_row()
    cloud = cloud_fn()
    if name == "beta0":
        cert = wiggle.wiggliness(cloud, bound_c=cfg.float("bound_c", 1.0),
                                 k0=cfg.float("k0", wiggle.K0_DEFAULT))
        flags = (f"squares={cert.qualifying_square_count}", f"lower_bound={cert.lower_bound!r}",
                 f"proof_alpha={cert.proof_alpha!r}")
        return _row("beta0", cert.beta0, 0.0, cert.scale_window, flags)
    if name == "tsp-sum":
        t = wiggle.tsp_sum(cloud)
        return _row("tsp-sum", t.total, 0.0, (2.0 ** -int(t.levels.max()),
                                              2.0 ** -int(t.levels.min())),
                    (f"levels={len(t.levels)}",))
    if name == "perfectness":
        scales = verify.perfectness_scales(cloud)
        r = uniformly_perfect(cloud, scales, seed=cfg.seed)
        return _row("perfectness", r.eps_hat, 0.0, (float(scales.min()), float(scales.max())),
                    (f"centers={r.n_centers}",))
    raise ConfigError(f"estimators: {name!r} is unknown; choose from {', '.join(ESTIMATORS)}")


def cmd_estimate(cfg: RunConfig) -> int:
    names = cfg.names("estimators", "mdim")
    unknown = [n for n in names if n not in ESTIMATORS]
    if unknown:
        raise ConfigError(f"estimators: {unknown[0]!r} is unknown; choose from {', '.join(ESTIMATORS)}")
    cache = {}

    def cloud_fn():
        if "cloud" not in cache:
            cache["cloud"] = build_cloud(cfg)
        return cache["cloud"]

    if any(n != "delta" for n in names):
        cloud_fn()  # build once before fanning out
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        rows = list(pool.map(lambda n: _estimate_one(n, cfg, cloud_fn), names))
    header = "estimator," + FIT_HEADER.split(",", 1)[1]
    body = header + "\n" + "".join(
        (r if n not in ("mdim", "kappa", "delta") else n + "," + r.split(",", 1)[1]) + "\n"
        for n, r in zip(names, rows))
    path = _write(cfg, cfg.str("report", "estimates.csv"),
                  _commented(provenance_lines(cfg, "estimate"), body))
    sys.stdout.write(body)
    print(f"-> {path}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    ids = [int(x) for x in cfg.names("checks", "")] if cfg.has("checks") else None
    corrupt = [int(x) for x in cfg.names("corrupt", "")]
    report = verify.run_checks(ids, seed=cfg.seed, budget_scale=cfg.float("budget_scale", 1.0),
                               corrupt=corrupt, enforce_time=cfg.str("enforce_time", "1") != "0",
                               on_result=lambda r: print(r.line(), flush=True))
    prov = provenance_lines(cfg, "verify")
    _write(cfg, "verify.csv", _commented(prov, report.csv_text()))
    _write(cfg, "verify_timing.txt", _commented(prov, report.timing_text()))
    failed = [r.cid for r in report.results if r.status == verify.FAIL]
    print("all checks passed" if not failed else f"failed checks: {failed}")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def cmd_render(cfg: RunConfig) -> int:
    prov = provenance_lines(cfg, "render")
    size = cfg.int("size", 512)
    overlay = cfg.str("overlay", "none")
    stem = cfg.str("name", "render")
    if overlay == "packing":
        pc = packing_configuration()
        disks = [pc.disk1, pc.disk2]
        svg = render_svg(None, disks, size=size)
    else:
        cloud = build_cloud(cfg)
        if overlay == "beta":
            tables = wiggle.beta_levels(cloud, [cfg.int("level", 3)])
            svg = wiggle.render_beta_svg(cloud, tables, size)
            _write(cfg, f"{stem}_beta.csv", _commented(prov, wiggle.beta_csv(tables)))
        elif overlay == "none":
            svg = render_svg(cloud, size=size)
        else:
            raise ConfigError(f"overlay={overlay!r} is unknown; choose none, beta or packing")
    path = _write(cfg, f"{stem}.svg", _svg_with_provenance(prov, svg))
    print(f"-> {path}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "estimate": cmd_estimate, "verify": cmd_verify,
            "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kleindim", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="key=value file")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", type=Path, default=None, help="output directory")
        s.add_argument("--threads", type=int, default=None)
        s.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def load_config(args) -> RunConfig:
    values = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"--config {args.config}: no such file")
        values.update(RunConfig.parse(args.config.read_text()))
    values.update(RunConfig.parse("\n".join(args.overrides)))
    cfg = RunConfig(values)
    seed = args.seed if args.seed is not None else cfg.int("seed", 0)
    threads = args.threads if args.threads is not None else cfg.int("threads", 1)
    out = args.out if args.out is not None else Path(cfg.str("out", "."))
    # these travel as flags, so keep them out of the hashed key set
    for k in ("seed", "threads", "out"):
        values.pop(k, None)
    if threads < 1:
        raise ConfigError(f"threads={threads} must be at least 1")
    cfg.seed, cfg.threads, cfg.out = int(seed), int(threads), Path(out)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"kleindim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"kleindim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
