"""Command line: ``parabren glean|render|verify|probe|cache``.

Exit codes: 0 success, 1 usage error, 2 enumeration cap exceeded, 3 solver
failure, 4 verification failure, 5 cache IO error.
"""

from __future__ import annotations

import configparser
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import checks
from .comptype import (CapExceeded, CompositionType, crit_seq, descendant_diagram,
                       enumerate_descendants, enumerate_gleanings, format_types, is_descendant,
                       is_gleaning)
from .dynmaps import MapError, parse_map
from .fatou import FatouError, FatouSolver, HornMap, RenormalizedMap, cache_dir, sigma0
from .render import (RenderError, Window, parse_size, render_basin, render_enriched,
                     render_psi_preimage, render_slice, render_virtual_basins)

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_SOLVER, EXIT_VERIFY, EXIT_IO = range(6)

log = logging.getLogger("parabren")


class Failure(click.ClickException):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


# ------------------------------------------------------------------ job configuration


@dataclass
class JobConfig:
    subcommand: str = "render"
    kind: str = "basin"
    map: str = "zexpz"
    window: str = "[-14.0,2.0]x[-7.0,7.0]"
    size: str = "800x600"
    log_coords: bool = False
    pq: str = "0"
    inner_pq: str = "0"
    sign: str = "+"
    eps: float = 1e-9
    nmax: int = 100_000
    budget: int = 200
    seed: int = checks.SEED
    output: str = "out"
    png: bool = False
    cache_dir: str = ""

    SECTIONS = {
        "job": ("subcommand", "kind", "map", "pq", "inner_pq", "sign"),
        "raster": ("window", "size", "log_coords"),
        "tolerances": ("eps",),
        "budgets": ("nmax", "budget", "seed"),
        "output": ("output", "png"),
        "cache": ("cache_dir",),
    }

    def validate(self):
        Window.parse(self.window)
        parse_size(self.size)
        Fraction(self.pq)
        Fraction(self.inner_pq)
        if self.sign not in ("+", "-"):
            raise ValueError(f"sign must be + or -, got {self.sign!r}")
        if not (self.eps > 0 and self.nmax > 0 and self.budget > 0):
            raise ValueError("eps, nmax and budget must be positive")
        return self

    def dumps(self):
        cp = configparser.ConfigParser(interpolation=None)
        for sec, names in self.SECTIONS.items():
            cp[sec] = {n: _cfg_str(getattr(self, n)) for n in names}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def loads(cls, text, **overrides):
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for sec, names in cls.SECTIONS.items():
            if not cp.has_section(sec):
                continue
            for n in names:
                if cp.has_option(sec, n):
                    values[n] = _cfg_parse(cp.get(sec, n), types[n])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values).validate()


def _cfg_str(v):
    return ("true" if v else "false") if isinstance(v, bool) else str(v)


def _cfg_parse(text, typ):
    if typ in ("bool", bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if typ in ("int", int):
        return int(text)
    if typ in ("float", float):
        return float(text)
    return text


def _job(ctx_config, **overrides):
    text = Path(ctx_config).read_text(encoding="utf-8") if ctx_config else ""
    try:
        job = JobConfig.loads(text, **overrides)
    except (ValueError, RenderError, ZeroDivisionError, configparser.Error) as exc:
        raise Failure(f"bad configuration: {exc}", EXIT_USAGE)
    if job.cache_dir:
        os.environ["PARABREN_CACHE"] = job.cache_dir
    return job


# ------------------------------------------------------------------ entry point


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress (cache hits, fits).")
def main(verbose):
    """Parabolic renormalization toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _seq(text):
    try:
        return crit_seq(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise click.BadParameter(str(exc))


def _ctype(text):
    try:
        return CompositionType.parse(text)
    except ValueError as exc:
        raise click.BadParameter(str(exc))


# ------------------------------------------------------------------ glean


@main.group()
def glean():
    """Gleanings, descendants and their diagrams."""


@glean.command("gleanings")
@click.argument("source")
@click.option("--up-to-perm", is_flag=True, help="One sorted representative per class.")
@click.option("--cap", type=int, default=10**6, show_default=True)
def glean_gleanings(source, up_to_perm, cap):
    """All gleanings of the sequence SOURCE (e.g. 2,2)."""
    try:
        out = enumerate_gleanings(_seq(source), up_to_perm, cap)
    except CapExceeded as exc:
        raise Failure(str(exc), EXIT_CAP)
    click.echo("".join(f"({','.join(map(str, s))})\n" for s in out), nl=False)


@glean.command("descendants")
@click.argument("ancestor")
@click.option("--up-to-perm", is_flag=True, help="One sorted representative per class.")
@click.option("--cap", type=int, default=10**6, show_default=True)
def glean_descendants(ancestor, up_to_perm, cap):
    """All descendants of the composition type ANCESTOR (e.g. "2 o 3")."""
    try:
        out = enumerate_descendants(_ctype(ancestor), up_to_perm, cap)
    except CapExceeded as exc:
        raise Failure(str(exc), EXIT_CAP)
    click.echo(format_types(out), nl=False)


@glean.command("check")
@click.option("--source", help="Critical sequence, e.g. 10,7.")
@click.option("--target", help="Candidate gleaning, e.g. 4,8,4.")
@click.option("--ancestor", help="Composition type, e.g. 3.")
@click.option("--candidate", help="Candidate descendant, e.g. '2 o 2'.")
def glean_check(source, target, ancestor, candidate):
    """YES with a witness, or NO."""
    if source and target:
        wit = is_gleaning(_seq(source), _seq(target))
    elif ancestor and candidate:
        wit = is_descendant(_ctype(ancestor), _ctype(candidate))
    else:
        raise click.UsageError("give --source/--target or --ancestor/--candidate")
    if wit is None:
        click.echo("NO")
    else:
        click.echo("YES beta=" + ",".join(str(b + 1) for b in wit.beta))


@glean.command("diagram")
@click.argument("ancestor")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="DOT file (default stdout).")
@click.option("--relation", is_flag=True, help="Draw every descendant relation.")
@click.option("--exceptional", is_flag=True, help="Add the exceptional node E.")
@click.option("--cap", type=int, default=10**4, show_default=True)
def glean_diagram(ancestor, output, relation, exceptional, cap):
    """DOT graph of the descendants of ANCESTOR."""
    try:
        text = descendant_diagram(_ctype(ancestor), relation, exceptional, cap)
    except CapExceeded as exc:
        raise Failure(str(exc), EXIT_CAP)
    if output:
        _write_text(output, text)
    else:
        click.echo(text, nl=False)


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise Failure(f"cannot write {path}: {exc}", EXIT_IO)


# ------------------------------------------------------------------ render


DEFAULT_WINDOWS = {
    "basin": "[-14.0,2.0]x[-7.0,7.0]",
    "psi": "[-4.0,1.0]x[-1.5,1.5]",
    "virtual": "[-1.5,1.0]x[-1.25,1.25]",
    "slice": "[-1.5,6.5]x[-3.75,4.25]",
    "enriched": "[-3.141592653589793,3.141592653589793]x[-2.0,2.0]",
}
DEFAULT_SIZES = {"basin": "800x600", "psi": "500x300", "virtual": "400x400",
                 "slice": "400x400", "enriched": "200x120"}


@main.command()
@click.argument("kind", type=click.Choice(["basin", "psi", "virtual", "slice", "enriched"]))
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="key = value file.")
@click.option("--map", "map_", help="Map specification, e.g. 'cubic λ=2/5 c=1,0'.")
@click.option("--window", help="[x0,x1]x[y0,y1] or cx,cy,w,h.")
@click.option("--size", help="WIDTHxHEIGHT in pixels.")
@click.option("--pq", help="Rotation p/q of the slice or of the renormalization.")
@click.option("--inner-pq", help="Rotation of the renormalization used by enriched slices.")
@click.option("--sign", type=click.Choice(["+", "-"]))
@click.option("--log-coords/--no-log-coords", default=None, help="Slice in log coordinates.")
@click.option("--nmax", type=int, help="Orbit budget per pixel.")
@click.option("--seed", type=int, help="Recorded in the sidecar.")
@click.option("-o", "--output", help="Output prefix (writes .ppm and .json).")
@click.option("--png/--no-png", default=None, help="Also write a PNG.")
@click.option("--cache-dir", help="Cache directory (else $PARABREN_CACHE).")
def render(kind, config, map_, window, size, pq, inner_pq, sign, log_coords, nmax, seed,
           output, png, cache_dir):
    """Render a raster and its sidecars."""
    job = _job(config, kind=kind, subcommand="render", map=map_,
               window=window or (None if config else DEFAULT_WINDOWS[kind]),
               size=size or (None if config else DEFAULT_SIZES[kind]), pq=pq,
               inner_pq=inner_pq, sign=sign, log_coords=log_coords, nmax=nmax, seed=seed,
               output=output, png=png, cache_dir=cache_dir)
    win, sz = Window.parse(job.window), parse_size(job.size)
    extra = {}
    try:
        if kind == "basin":
            raster = render_basin(parse_map(job.map), win, sz, nmax=job.nmax, eps=job.eps)
        elif kind == "psi":
            solver = FatouSolver(parse_map(job.map), eps=job.eps)
            raster = render_psi_preimage(solver, win, sz, nmax=job.nmax)
        elif kind == "virtual":
            rmap = RenormalizedMap.build(parse_map(job.map), Fraction(job.pq), job.sign, eps=job.eps)
            vb = render_virtual_basins(rmap, win, sz, nmax=job.nmax)
            raster = vb.raster
            extra = {"overlap_px": vb.overlap_px, "painted_px": vb.painted_px,
                     "image_checked": vb.image_checked, "image_hits": vb.image_hits}
        elif kind == "slice":
            raster = render_slice(Fraction(job.pq), win, sz, job.log_coords, nmax=job.nmax)
        else:
            raster = render_enriched(Fraction(job.pq), Fraction(job.inner_pq), win, sz,
                                     job.log_coords, budget=job.budget)
    except (FatouError, MapError) as exc:
        raise Failure(f"solver failure: {exc}", EXIT_SOLVER)
    except RenderError as exc:
        raise Failure(str(exc), EXIT_USAGE)
    raster.meta.update(extra, seed=job.seed, config=job.dumps())
    try:
        raster.write_ppm(job.output + ".ppm")
        raster.write_sidecar(job.output + ".json")
        if raster.census:
            raster.write_census(job.output + ".csv")
        if job.png:
            raster.write_png(job.output + ".png")
    except OSError as exc:
        raise Failure(f"cannot write output: {exc}", EXIT_IO)
    pearls = raster.meta.get("pearl_count")
    msg = f"wrote {job.output}.ppm ({raster.width}x{raster.height})"
    if pearls is not None:
        msg += f", {pearls} pearls"
    click.echo(msg)


# ------------------------------------------------------------------ verify


@main.command()
@click.argument("groups", nargs=-1)
@click.option("--map", "map_", type=click.Choice(sorted(checks.ABEL_MAPS)), multiple=True,
              help="Restrict abel/horn to these maps.")
@click.option("--json", "json_out", type=click.Path(dir_okay=False), help="Write the JSON report.")
def verify(groups, map_, json_out):
    """Run acceptance groups: comptype abel horn basin dyn2 pearls gleaning virtual determinism."""
    unknown = [g for g in groups if g not in checks.CHECKS]
    if unknown:
        raise Failure(f"unknown group(s): {', '.join(unknown)}; choose from "
                      f"{', '.join(checks.CHECKS)}", EXIT_USAGE)
    results = []
    for g in groups or checks.CHECKS:
        for fn in checks.CHECKS[g]:
            if map_ and fn is checks.check_abel:
                results.append(fn(names=map_))
            elif map_ and fn is checks.check_horn:
                results.append(fn(names=map_))
            else:
                results.append(fn())
            click.echo(results[-1].line())
    report = {"passed": all(r.passed for r in results), "seed": checks.SEED,
              "results": [r.as_dict() for r in results]}
    text = json.dumps(report, indent=2, sort_keys=True, default=_json) + "\n"
    if json_out:
        _write_text(json_out, text)
    else:
        click.echo(text, nl=False)
    if not report["passed"]:
        sys.exit(EXIT_VERIFY)


def _json(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


# ------------------------------------------------------------------ probe


def _points(values):
    out = []
    for v in values:
        try:
            out.append(complex(v.replace(" ", "").replace("i", "j")))
        except ValueError:
            raise click.BadParameter(f"not a complex number: {v!r}")
    return out


@main.command()
@click.argument("what", type=click.Choice(["psi", "phi", "horn", "rf", "sigma0"]))
@click.argument("points", nargs=-1)
@click.option("--map", "map_", default="zexpz", show_default=True)
@click.option("--pq", default="0", show_default=True)
@click.option("--sign", type=click.Choice(["+", "-"]), default="+", show_default=True)
def probe(what, points, map_, pq, sign):
    """Evaluate coordinates at POINTS; CSV on stdout.

    psi: zeta, psi_rep(zeta), phi_att(psi_rep(zeta)).  phi: z, phi_att(z).
    horn: zeta, h(zeta).  rf: W, Rf(W), Rf(W)/W.  sigma0: POINTS are heights
    H0,H1 pairs such as 3,6.
    """
    try:
        f = parse_map(map_)
        horn = HornMap.build(f, sign)
    except (FatouError, MapError) as exc:
        raise Failure(f"solver failure: {exc}", EXIT_SOLVER)
    out = io.StringIO()
    if what == "sigma0":
        out.write("H0,H1,sigma0_re,sigma0_im,error\n")
        for pair in points or ("3,6",):
            H0, H1 = (float(v) for v in pair.split(","))
            try:
                s = sigma0(horn, Fraction(pq), sign, H0, H1)
                out.write(f"{H0!r},{H1!r},{s.real!r},{s.imag!r},\n")
            except FatouError as exc:
                out.write(f"{H0!r},{H1!r},,,{_csv_err(exc)}\n")
        click.echo(out.getvalue(), nl=False)
        return
    rmap = None
    if what == "rf":
        try:
            rmap = RenormalizedMap(horn, Fraction(pq), sign)
        except FatouError as exc:
            raise Failure(f"solver failure: {exc}", EXIT_SOLVER)
    cols = {"psi": "zeta,psi,phi_of_psi", "phi": "z,phi", "horn": "zeta,h", "rf": "W,Rf,ratio"}[what]
    head = []
    for c in cols.split(","):
        head += [c + "_re", c + "_im"]
    out.write(",".join(head) + ",error\n")
    for z in _points(points):
        vals = [z]
        err = ""
        try:
            if what == "psi":
                w = complex(horn.rep.repelling_param(z)[0][0])
                vals.append(w)
                vals.append(complex(horn.att.attracting_coord(w)[0][0]))
            elif what == "phi":
                vals.append(complex(horn.att.attracting_coord(z)[0][0]))
            elif what == "horn":
                vals.append(complex(horn(z)[0][0]))
            else:
                w = complex(rmap(z)[0][0])
                vals += [w, w / z if z else complex("nan")]
        except FatouError as exc:
            err = _csv_err(exc)
        ncol = len(cols.split(","))
        vals += [complex("nan")] * (ncol - len(vals))
        row = []
        for v in vals:
            row += [repr(v.real), repr(v.imag)]
        out.write(",".join(row) + f",{err}\n")
    click.echo(out.getvalue(), nl=False)


def _csv_err(exc):
    return '"' + str(exc).replace('"', "'") + '"'


# ------------------------------------------------------------------ cache


def _cache_path(cache_dir_opt):
    if cache_dir_opt:
        os.environ["PARABREN_CACHE"] = cache_dir_opt
    d = cache_dir()
    if d is None:
        raise Failure("no cache directory: set PARABREN_CACHE or pass --cache-dir", EXIT_USAGE)
    return d


@main.group()
def cache():
    """List, inspect or evict fitted-constant cache entries."""


@cache.command("list")
@click.option("--cache-dir")
def cache_list(cache_dir):
    d = _cache_path(cache_dir)
    try:
        files = sorted(d.glob("*.json")) if d.exists() else []
        for p in files:
            doc = json.loads(p.read_text(encoding="utf-8"))
            click.echo(f"{p.stem}\t{doc.get('label', '')}")
    except (OSError, ValueError) as exc:
        raise Failure(f"cache read error: {exc}", EXIT_IO)


@cache.command("inspect")
@click.argument("key")
@click.option("--cache-dir")
def cache_inspect(key, cache_dir):
    d = _cache_path(cache_dir)
    try:
        click.echo((d / f"{key}.json").read_text(encoding="utf-8"), nl=False)
    except OSError as exc:
        raise Failure(f"cache read error: {exc}", EXIT_IO)


@cache.command("evict")
@click.argument("keys", nargs=-1)
@click.option("--all", "all_", is_flag=True, help="Remove every entry.")
@click.option("--cache-dir")
def cache_evict(keys, all_, cache_dir):
    d = _cache_path(cache_dir)
    if not keys and not all_:
        raise click.UsageError("give KEYS or --all")
    try:
        paths = sorted(d.glob("*.json")) if all_ else [d / f"{k}.json" for k in keys]
        n = 0
        for p in paths:
            if p.exists():
                p.unlink()
                n += 1
    except OSError as exc:
        raise Failure(f"cache write error: {exc}", EXIT_IO)
    click.echo(f"evicted {n}")


def run():
    """Console entry point mapping usage errors to exit code 1."""
    try:
        main.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    except Failure as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except SystemExit:
        raise
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    run()
