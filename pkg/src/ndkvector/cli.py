"""``ndkv`` command line: generate, build, query, bench, verify."""

from __future__ import annotations

import logging
import sys
import time

import click
import numpy as np

from . import bench as benchmod
from .baselines import brute_force_search, kdtree_build, kdtree_search
from .build import preprocess
from .core import NDKVError, RangeQuery
from .persistence import MAGIC, load_csv, load_structure, save_structure, to_dataset, write_csv
from .variants import search_variant

VARIANTS = {
    "full": dict(index=True, kvector=True),
    "noindex": dict(index=False, kvector=True),
    "nokv": dict(index=True, kvector=False),
    "nokv-noindex": dict(index=False, kvector=False),
}


def _ints(text: str) -> list[int]:
    return [int(float(t)) for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _names(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except NDKVError as exc:
            raise click.ClickException(str(exc)) from exc


@click.group(cls=_Group)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Orthogonal range search with the n-dimensional k-vector."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")


@main.command()
@click.option("--n", "n", type=int, required=True)
@click.option("--d", "d", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--distribution", type=click.Choice(["uniform", "clustered"]), default="uniform")
@click.option("--output", type=click.Path(dir_okay=False), required=True)
def generate(n: int, d: int, seed: int, distribution: str, output: str) -> None:
    """Write a synthetic dataset as CSV."""
    ds = benchmod.generate_dataset(n, d, distribution, seed)
    write_csv(ds, output, header=[f"x{j}" for j in range(d)])
    click.echo(f"wrote {n}x{d} {distribution} points to {output}")


@main.command()
@click.option("--input", "input_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--output", type=click.Path(dir_okay=False), required=True)
@click.option("--ndb", type=int, default=None, help="Sub-database count (default ceil(sqrt(n))).")
@click.option("--nk", type=int, default=None, help="k-vector length (default ceil(n_p/10)).")
@click.option("--variant", type=click.Choice(list(VARIANTS)), default="full", show_default=True)
def build(input_: str, output: str, ndb: int | None, nk: int | None, variant: str) -> None:
    """Preprocess a CSV dataset into a structure file."""
    ds = load_csv(input_)
    t0 = time.perf_counter()
    pre = preprocess(ds, ndb, nk, **VARIANTS[variant])
    el = time.perf_counter() - t0
    save_structure(pre, output)
    click.echo(
        f"built {variant} structure n={pre.n} d={pre.d} n_db={pre.n_db} n_k={pre.n_k} "
        f"in {el:.3f}s -> {output}"
    )


def _load_any(path: str, ndb, nk, variant):
    with open(path, "rb") as fh:
        is_structure = fh.read(len(MAGIC)) == MAGIC
    if is_structure:
        return load_structure(path)
    return preprocess(load_csv(path), ndb, nk, **VARIANTS[variant])


@main.command()
@click.option("--input", "input_", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Structure file or CSV dataset.")
@click.option("--range", "range_", required=True, help='Box as "a0:b0,a1:b1,...".')
@click.option("--algo", default="ndkv", show_default=True,
              type=click.Choice(["ndkv", "brute", "kdtree"]))
@click.option("--ndb", type=int, default=None)
@click.option("--nk", type=int, default=None)
@click.option("--variant", type=click.Choice(list(VARIANTS)), default="full")
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write matching ids here instead of stdout.")
def query(input_, range_, algo, ndb, nk, variant, output) -> None:
    """Print the original row ids inside a box, one per line."""
    q = RangeQuery.parse(range_)
    pre = _load_any(input_, ndb, nk, variant)
    if algo == "ndkv":
        res = search_variant(pre, q)
    elif algo == "brute":
        res = brute_force_search(to_dataset(pre), q)
    else:
        res = kdtree_search(kdtree_build(to_dataset(pre)), q)
    text = "\n".join(str(i) for i in res.sorted_ids())
    if output:
        with open(output, "w") as fh:
            fh.write(text + ("\n" if text else ""))
    elif text:
        click.echo(text)
    click.echo(f"{len(res)} match(es), {res.examined} examined", err=True)


@main.command("bench")
@click.option("--n", "n", default="100000", show_default=True, help="Comma list of sizes.")
@click.option("--d", "d", default="6", show_default=True, help="Comma list of dimensions.")
@click.option("--fraction", default="0.05", show_default=True, help="Comma list of target fractions.")
@click.option("--algo", default=",".join(benchmod.DEFAULT_ALGOS), show_default=True)
@click.option("--repeats", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--ndb", type=int, default=None)
@click.option("--nk", type=int, default=None)
@click.option("--distribution", type=click.Choice(["uniform", "clustered"]), default="uniform")
@click.option("--threads", type=int, default=None,
              help="Split ndkv sub-databases across threads (rows labelled ndkv[threads=N]).")
@click.option("--csv-out", type=click.Path(dir_okay=False), default=None)
def bench_cmd(n, d, fraction, algo, repeats, seed, ndb, nk, distribution, threads, csv_out) -> None:
    """Time every algorithm over an (n, d, fraction) grid and emit CSV rows."""
    cfg = benchmod.BenchConfig(
        n=_ints(n), d=_ints(d), fractions=_floats(fraction), algos=_names(algo),
        repeats=repeats, seed=seed, n_db=ndb, n_k=nk, distribution=distribution, workers=threads,
    )
    out = open(csv_out, "w", newline="") if csv_out else sys.stdout
    try:
        import csv
        from dataclasses import asdict

        w = csv.DictWriter(out, fieldnames=benchmod.BenchRecord.columns())
        w.writeheader()
        benchmod.run_benchmark(cfg, on_record=lambda r: (w.writerow(asdict(r)), out.flush()))
    except benchmod.BenchmarkMismatch as exc:
        raise click.ClickException(f"result mismatch: {exc}") from exc
    finally:
        if csv_out:
            out.close()


@main.command()
@click.option("--input", "input_", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CSV dataset; random data when omitted.")
@click.option("--n", "n", type=int, default=10_000, show_default=True)
@click.option("--d", "d", type=int, default=3, show_default=True)
@click.option("--queries", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ndb", type=int, default=None)
@click.option("--nk", type=int, default=None)
def verify(input_, n, d, queries, seed, ndb, nk) -> None:
    """Check every variant and the k-d tree against brute force on random boxes."""
    ds = load_csv(input_) if input_ else benchmod.generate_dataset(n, d, "uniform", seed)
    structures = {v: preprocess(ds, ndb, nk, **flags) for v, flags in VARIANTS.items()}
    tree = kdtree_build(ds)
    rng = np.random.default_rng(seed)
    failures = 0
    for i in range(queries):
        f = float(10 ** rng.uniform(-4, 0))
        q = benchmod.generate_query(ds, f, seed + i)
        want = brute_force_search(ds, q).sorted_ids()
        got = {v: search_variant(p, q).sorted_ids() for v, p in structures.items()}
        got["kdtree"] = kdtree_search(tree, q).sorted_ids()
        for name, ids in got.items():
            if not np.array_equal(ids, want):
                failures += 1
                click.echo(f"query {i}: {name} returned {ids.size} ids, brute force {want.size}", err=True)
    status = "PASS" if failures == 0 else "FAIL"
    click.echo(f"{status}: {queries} queries x {len(structures) + 1} algorithms, {failures} mismatches")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
