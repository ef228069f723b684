"""Command-line pipeline: gen, dos, emulate, fit, report, pipeline.

Output layout under ``--out``::

    instances/<id>.json   index.csv
    dos/<id>.csv          dos_status.csv
    results_<machine>.csv fits_<machine>.csv records_<machine>.csv
    report/summary.csv    report/scatter.csv  report/scatter_N<size>.csv
    report/heatmap_*.csv
    report/spread_by_size.csv  report/skipped.csv

Every CSV starts with a ``# freezeout <version> seed=<master>`` line and is
a pure function of its inputs, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .degeneracy import (
    DEFAULT_CUTOFF,
    CutoffExceeded,
    DensityOfStates,
    TooLarge,
    WlConfig,
    brute_force_dos,
    count_low_levels,
    validate_dos,
    wang_landau_ensemble,
)
from .emulator import McmcConfig, MachineProfile, RESULTS_HEADER, result_rows, run_cycles
from .instance import GenerationError, InstanceError, energy, generate_planted, load_instance, save_instance
from .schedule import (
    T_COLD_MK,
    T_HOT_MK,
    ScheduleError,
    beta_ideal,
    bundled_schedule,
    load_schedule,
)
from .seeds import derive_seed
from .thermometry import (
    Q_SMALL,
    ThermometryRecord,
    compare_machines,
    make_record,
)
from .topology import TopologyError, build_chimera, intersected_chimera

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3

RECORD_HEADER = ("instance_id", "N", "alpha", "machine", "median_beta", "beta_min", "beta_max",
                 "s_star", "Q_star", "R_fluct", "spread_95_5", "flags")
STATUS_HEADER = ("instance_id", "N", "mode", "E0", "g0", "E1", "g1", "status", "ratio0", "ratio1")


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


# -- CSV helpers --------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: Path, header, rows, seed: int, extra: str | None = None) -> None:
    buf = io.StringIO()
    buf.write(f"# freezeout {__version__} seed={seed}\n")
    if extra:
        buf.write(f"# {extra}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> tuple[list[dict[str, str]], dict[str, str]]:
    """Rows as dicts plus ``key=value`` pairs found on comment lines."""
    meta: dict[str, str] = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line)
    return list(csv.DictReader(body)), meta


def _float(s: str) -> float:
    return math.nan if s in ("", "nan") else float(s)


# -- instances ----------------------------------------------------------------


def instance_files(paths: list[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(p.glob("*.json"))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"no such instance file or directory: {p}")
    if not out:
        raise FileNotFoundError("no instance files found")
    return out


def cmd_gen(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    try:
        alpha = Fraction(args.alpha)
    except ValueError:
        raise UsageError(f"bad --alpha {args.alpha!r}") from None
    if alpha <= 0:
        raise UsageError("--alpha must be positive")
    try:
        topo = build_chimera(args.L) if args.no_mask else intersected_chimera(args.L)
    except TopologyError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out)
    inst_dir = out / "instances"
    inst_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    tag = f"L{args.L}_a{str(alpha).replace('/', '-')}"
    for k in range(args.count):
        iid = f"{tag}_{k:04d}"
        seed = derive_seed(args.seed, "gen", args.L, str(alpha), k)
        try:
            inst = generate_planted(topo, alpha, args.j_max, seed, args.max_loop_len)
        except (InstanceError, GenerationError) as e:
            raise UsageError(f"generation failed for {iid}: {e}") from None
        meta = {"id": iid, "toolkit": f"freezeout {__version__}", "master_seed": args.seed}
        path = inst_dir / f"{iid}.json"
        save_instance(inst, path, meta)
        rows.append((iid, f"instances/{path.name}", args.L, inst.n, str(alpha), inst.j_max, seed,
                     len(inst.clauses), energy(inst, inst.planted_array)))
    write_csv(out / "index.csv",
              ("instance_id", "file", "L", "N", "alpha", "j_max", "seed", "n_clauses", "E_planted"),
              rows, args.seed)
    print(f"wrote {len(rows)} instances to {inst_dir}")
    return EXIT_OK


# -- densities of states ------------------------------------------------------


def _wl_config(args) -> WlConfig:
    return WlConfig(flatness=args.flatness, f_final=args.f_final, runs=args.runs,
                    flatness_check_interval=args.interval, max_steps=args.max_steps,
                    criterion=args.criterion)


def _dos_task(task):
    path, mode, cutoff, wl, tol, seed = task
    inst = load_instance(path)
    iid = path.stem
    mseed = derive_seed(seed, "dos", iid)
    dos = None
    r0 = r1 = None
    ll = None
    try:
        ll = count_low_levels(inst, cutoff)
        status = "ok"
    except CutoffExceeded:
        status = "CutoffExceeded"
    if mode == "brute":
        try:
            dos = brute_force_dos(inst)
            if ll is None:
                status = "ok"
        except TooLarge:
            status = "TooLarge"
    elif mode == "exact":
        if ll is not None:
            dos = ll.as_dos(inst.n, float(inst.scale))
    else:
        dos = wang_landau_ensemble(inst, wl, mseed)
        if ll is not None:
            v = validate_dos(dos, ll, tol)
            status, r0, r1 = ("ok" if v.accepted else v.reason), v.ratio0, v.ratio1
        else:
            status = "unvalidated-" + status
    row = (iid, inst.n, mode,
           None if ll is None else ll.E0, None if ll is None else ll.g0,
           None if ll is None else ll.E1, None if ll is None else ll.g1,
           status, r0, r1)
    return iid, row, dos, float(inst.scale)


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def write_dos(path: Path, iid: str, dos: DensityOfStates, seed: int) -> None:
    extra = f"instance={iid} n_spins={dos.n_spins} scale={dos.scale!r} provenance={dos.provenance}"
    write_csv(path, ("energy_int", "log_g", "ci_half_width", "provenance"), dos.to_rows(), seed, extra)


def read_dos(path: Path) -> DensityOfStates:
    rows, meta = read_csv(path)
    ci = [_float(r["ci_half_width"]) for r in rows]
    return DensityOfStates(
        energies=np.array([int(r["energy_int"]) for r in rows], dtype=np.int64),
        log_g=np.array([float(r["log_g"]) for r in rows]),
        n_spins=int(meta["n_spins"]),
        provenance=meta.get("provenance", rows[0]["provenance"] if rows else ""),
        scale=float(meta["scale"]),
        ci_half_width=None if all(math.isnan(c) for c in ci) else np.array(ci),
    )


def run_dos(files: list[Path], out: Path, mode: str, cutoff: int, wl: WlConfig, tol: float,
            seed: int, workers: int) -> list[tuple]:
    tasks = [(p, mode, cutoff, wl, tol, seed) for p in files]
    results = _map(_dos_task, tasks, workers)
    rows = []
    for iid, row, dos, _ in results:
        rows.append(row)
        if dos is not None:
            write_dos(out / "dos" / f"{iid}.csv", iid, dos, seed)
    write_csv(out / "dos_status.csv", STATUS_HEADER, rows, seed)
    return rows


def cmd_dos(args) -> int:
    files = instance_files(args.instances)
    rows = run_dos(files, Path(args.out), args.mode, args.cutoff, _wl_config(args), args.tol,
                   args.seed, args.workers)
    n_ok = sum(r[7] == "ok" for r in rows)
    print(f"{n_ok}/{len(rows)} instances ok ({args.mode})")
    return EXIT_OK


# -- emulation ----------------------------------------------------------------


@dataclass
class MachineSpec:
    """Picklable description of one emulated machine."""

    name: str
    temperature_mK: float
    schedule: str | None = None
    linear: bool = False
    sigma_j: float = 0.05
    sigma_h: float = 0.03
    s_star_range: tuple[float, float] = (0.6, 1.0)
    log_coeff: float = 0.0
    t0_us: float = 20.0
    anneal_time_us: float = 20.0
    anneals_per_cycle: int = 20_000
    cycles: int = 22
    method: str = "auto"
    burn_in_sweeps: int = 1000
    thin_sweeps: int = 1
    samples_per_chain: int = 1000

    def load_schedule(self):
        if self.schedule is None:
            return bundled_schedule(self.temperature_mK, self.name)
        return load_schedule(self.schedule, self.temperature_mK, self.name, self.linear)

    def profile(self) -> MachineProfile:
        return MachineProfile(
            name=self.name, schedule=self.load_schedule(),
            sigma_j=self.sigma_j, sigma_h=self.sigma_h, s_star_range=tuple(self.s_star_range),
            log_coeff=self.log_coeff, t0_us=self.t0_us, anneal_time_us=self.anneal_time_us,
            anneals_per_cycle=self.anneals_per_cycle, cycles=self.cycles, method=self.method,
            mcmc=McmcConfig(self.burn_in_sweeps, self.thin_sweeps, self.samples_per_chain),
        )


def _emulate_task(task):
    path, spec, seed = task
    inst = load_instance(path)
    iid = path.stem
    cycles = run_cycles(inst, spec.profile(), seed, instance_key=iid)
    return iid, list(result_rows(iid, spec.name, cycles))


def run_emulate(files: list[Path], spec: MachineSpec, out: Path, seed: int, workers: int) -> Path:
    results = _map(_emulate_task, [(p, spec, seed) for p in files], workers)
    rows = [r for _, rs in results for r in rs]
    path = out / f"results_{spec.name}.csv"
    write_csv(path, RESULTS_HEADER, rows, seed, f"machine={spec.name} temperature_mK={spec.temperature_mK!r}")
    return path


def _spec_from_args(args) -> MachineSpec:
    temp = args.temperature_mK
    if temp is None:
        temp = T_COLD_MK if args.machine == "cold" else T_HOT_MK
    return MachineSpec(
        name=args.machine, temperature_mK=temp, schedule=args.schedule, linear=args.linear,
        sigma_j=args.sigma_j, sigma_h=args.sigma_h, s_star_range=tuple(args.s_star_range),
        log_coeff=args.log_coeff, anneal_time_us=args.anneal_time, anneals_per_cycle=args.anneals,
        cycles=args.cycles, method=args.method, burn_in_sweeps=args.burn_in,
        thin_sweeps=args.thin, samples_per_chain=args.samples_per_chain,
    )


def cmd_emulate(args) -> int:
    files = instance_files(args.instances)
    spec = _spec_from_args(args)
    spec.load_schedule()
    path = run_emulate(files, spec, Path(args.out), args.seed, args.workers)
    print(f"wrote {path}")
    return EXIT_OK


# -- fitting ------------------------------------------------------------------


def _accepted(out: Path) -> tuple[set[str], dict[str, str]]:
    status_path = out / "dos_status.csv"
    rows, _ = read_csv(status_path)
    ok = {r["instance_id"] for r in rows if r["status"] == "ok"}
    bad = {r["instance_id"]: r["status"] for r in rows if r["status"] != "ok"}
    return ok, bad


def run_fit(results_path: Path, spec: MachineSpec, out: Path, seed: int, alphas: dict[str, str] | None = None,
            fluct: str = "std") -> tuple[list[ThermometryRecord], list[tuple[str, str, str]]]:
    rows, _ = read_csv(results_path)
    sch = spec.load_schedule()
    ok, bad = _accepted(out)
    by_id: dict[str, list[dict]] = {}
    for r in rows:
        by_id.setdefault(r["instance_id"], []).append(r)
    records, skipped, fit_rows = [], [], []
    for iid in sorted(by_id):
        if iid not in ok:
            skipped.append((iid, spec.name, bad.get(iid, "no-dos-status")))
            continue
        dos_path = out / "dos" / f"{iid}.csv"
        if not dos_path.exists():
            skipped.append((iid, spec.name, "missing-dos"))
            continue
        dos = read_dos(dos_path)
        cyc = sorted(by_id[iid], key=lambda r: int(r["cycle"]))
        p0 = [float(r["P0"]) for r in cyc]
        n_anneals = int(cyc[0]["n_anneals"])
        rec = make_record(iid, spec.name, p0, dos, sch, n_anneals, (alphas or {}).get(iid, ""), fluct)
        records.append(rec)
        for r, b, f in zip(cyc, rec.betas, rec.beta_flags):
            fit_rows.append((iid, int(r["cycle"]), float(r["P0"]), b, f))
    extra = f"machine={spec.name} beta_ideal={beta_ideal(sch)!r} temperature_mK={sch.temperature_mK!r}"
    write_csv(out / f"fits_{spec.name}.csv", ("instance_id", "cycle", "P0", "beta_eff", "flag"), fit_rows, seed)
    write_csv(out / f"records_{spec.name}.csv", RECORD_HEADER, [record_row(r) for r in records], seed, extra)
    return records, skipped


def record_row(r: ThermometryRecord):
    return (r.instance_id, r.N, r.alpha, r.machine, r.median_beta, r.beta_min, r.beta_max,
            r.s_star, r.q_star, r.R_fluct, r.spread_95_5, r.flags)


def read_records(path: Path) -> tuple[list[ThermometryRecord], dict[str, str]]:
    rows, meta = read_csv(path)
    recs = [
        ThermometryRecord(
            instance_id=r["instance_id"], machine=r["machine"], N=int(r["N"]), alpha=r["alpha"],
            p0=(), betas=(), beta_flags=(),
            median_beta=_float(r["median_beta"]), beta_min=_float(r["beta_min"]),
            beta_max=_float(r["beta_max"]), s_star=_float(r["s_star"]), q_star=_float(r["Q_star"]),
            R_fluct=_float(r["R_fluct"]), spread_95_5=_float(r["spread_95_5"]), flags=r["flags"],
        )
        for r in rows
    ]
    return recs, meta


def _alphas(out: Path) -> dict[str, str]:
    idx = out / "index.csv"
    if not idx.exists():
        return {}
    rows, _ = read_csv(idx)
    return {r["instance_id"]: r["alpha"] for r in rows}


def cmd_fit(args) -> int:
    out = Path(args.out)
    spec = _spec_from_args(args)
    results = Path(args.results) if args.results else out / f"results_{spec.name}.csv"
    records, skipped = run_fit(results, spec, out, args.seed, _alphas(out), args.fluct)
    write_csv(out / f"skipped_{spec.name}.csv", ("instance_id", "machine", "reason"), skipped, args.seed)
    print(f"fitted {len(records)} instances, skipped {len(skipped)}")
    return EXIT_OK


# -- report -------------------------------------------------------------------


def _heatmap(x: np.ndarray, y: np.ndarray, bins: int = 20):
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size == 0:
        return []
    lo, hi = float(min(x.min(), y.min())), float(max(x.max(), y.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    H, _, _ = np.histogram2d(x, y, bins=[edges, edges])
    return [(float(edges[i]), float(edges[i + 1]), float(edges[j]), float(edges[j + 1]), int(H[i, j]))
            for i in range(bins) for j in range(bins)]


def run_report(hot_path: Path, cold_path: Path, out: Path, seed: int, q_small: float = Q_SMALL,
               n_boot: int = 10_000, skipped: list[tuple[str, str, str]] = ()):
    hot, hmeta = read_records(hot_path)
    cold, cmeta = read_records(cold_path)
    ratio = math.nan
    if "beta_ideal" in hmeta and "beta_ideal" in cmeta:
        ratio = float(cmeta["beta_ideal"]) / float(hmeta["beta_ideal"])
    rep = compare_machines(hot, cold, q_small, ratio, n_boot, derive_seed(seed, "bootstrap"))
    rdir = out / "report"
    fluct = [r.R_fluct for r in hot + cold if math.isfinite(r.R_fluct)]
    summary = list(rep.summary_rows())
    summary.append(("R_fluct_median", float(np.median(fluct)) if fluct else math.nan, math.nan, math.nan,
                    len(fluct), math.nan))
    write_csv(rdir / "summary.csv", ("statistic", "value", "ci_low", "ci_high", "n", "reference"), summary, seed,
              "R_Q=median(Q_hot/Q_cold) R_beta=median(beta_cold/beta_hot)")

    hot_by = {r.instance_id: r for r in hot}
    scatter = []
    for k, iid in enumerate(rep.ids):
        h = hot_by[iid]
        scatter.append((iid, h.N, h.alpha, rep.beta_hot[k], rep.beta_cold[k], rep.q_hot[k], rep.q_cold[k]))
    scatter.sort(key=lambda r: (r[1], r[0]))
    sc_header = ("instance_id", "N", "alpha", "beta_hot", "beta_cold", "Q_hot", "Q_cold")
    write_csv(rdir / "scatter.csv", sc_header, scatter, seed)
    for N in sorted({r[1] for r in scatter}):
        write_csv(rdir / f"scatter_N{N}.csv", sc_header, [r for r in scatter if r[1] == N], seed)
    hm_header = ("x_lo", "x_hi", "y_lo", "y_hi", "count")
    write_csv(rdir / "heatmap_beta.csv", hm_header, _heatmap(rep.beta_hot, rep.beta_cold), seed,
              "x=beta_hot y=beta_cold")
    write_csv(rdir / "heatmap_q.csv", hm_header, _heatmap(rep.q_hot, rep.q_cold), seed, "x=Q_hot y=Q_cold")

    size_rows = []
    for machine, recs in (("hot", hot), ("cold", cold)):
        by_n: dict[int, list[ThermometryRecord]] = {}
        for r in recs:
            by_n.setdefault(r.N, []).append(r)
        for N in sorted(by_n):
            sp = np.array([r.spread_95_5 for r in by_n[N]], dtype=float)
            rf = np.array([r.R_fluct for r in by_n[N]], dtype=float)
            sp, rf = sp[np.isfinite(sp)], rf[np.isfinite(rf)]
            size_rows.append((
                recs[0].machine if recs else machine, N, len(by_n[N]),
                float(np.median(sp)) if sp.size else math.nan,
                float(np.percentile(sp, 25)) if sp.size else math.nan,
                float(np.percentile(sp, 75)) if sp.size else math.nan,
                float(np.median(rf)) if rf.size else math.nan,
            ))
    write_csv(rdir / "spread_by_size.csv",
              ("machine", "N", "n_instances", "spread_95_5_median", "spread_95_5_q25", "spread_95_5_q75",
               "R_fluct_median"), size_rows, seed)
    paired = set(rep.ids)
    sk = list(skipped)
    for r in hot + cold:
        if r.instance_id not in paired and not any(s[0] == r.instance_id and s[1] == r.machine for s in sk):
            sk.append((r.instance_id, r.machine, r.flags or "unpaired"))
    sk.sort()
    write_csv(rdir / "skipped.csv", ("instance_id", "machine", "reason"), sk, seed)
    return rep


def cmd_report(args) -> int:
    out = Path(args.out)
    hot = Path(args.hot) if args.hot else out / "records_hot.csv"
    cold = Path(args.cold) if args.cold else out / "records_cold.csv"
    skipped = []
    for p in (out / "skipped_hot.csv", out / "skipped_cold.csv"):
        if p.exists():
            skipped += [(r["instance_id"], r["machine"], r["reason"]) for r in read_csv(p)[0]]
    rep = run_report(hot, cold, out, args.seed, args.q_small, args.bootstrap, skipped)
    print(f"R_beta={rep.R_beta:.4f} CI=({rep.R_beta_ci[0]:.4f}, {rep.R_beta_ci[1]:.4f}) pairs={rep.n_pairs}")
    return EXIT_OK


# -- manifest-driven pipeline -------------------------------------------------


@dataclass
class RunManifest:
    seed: int
    out: str
    instance_dir: str | None = None
    generate: list[dict] = field(default_factory=list)
    machines: list[MachineSpec] = field(default_factory=list)
    dos: dict = field(default_factory=dict)
    workers: int = 1
    q_small: float = Q_SMALL
    bootstrap: int = 10_000

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        doc = json.loads(Path(path).read_text())
        base = Path(path).parent
        try:
            machines = [MachineSpec(**m) for m in doc.get("machines", [])]
        except TypeError as e:
            raise ValidationFailure(f"bad machine entry: {e}") from None
        for m in machines:
            if m.schedule is not None:
                m.schedule = str((base / m.schedule).resolve()) if not Path(m.schedule).is_absolute() else m.schedule
        inst_dir = doc.get("instance_dir")
        if inst_dir is not None and not Path(inst_dir).is_absolute():
            inst_dir = str((base / inst_dir).resolve())
        out = doc.get("out", "out")
        if not Path(out).is_absolute():
            out = str((base / out).resolve())
        known = {"seed", "out", "instance_dir", "generate", "machines", "dos", "workers", "q_small", "bootstrap"}
        unknown = set(doc) - known
        if unknown:
            raise ValidationFailure(f"unknown manifest keys: {sorted(unknown)}")
        return cls(seed=int(doc["seed"]), out=out, instance_dir=inst_dir, generate=doc.get("generate", []),
                   machines=machines, dos=doc.get("dos", {}), workers=int(doc.get("workers", 1)),
                   q_small=float(doc.get("q_small", Q_SMALL)), bootstrap=int(doc.get("bootstrap", 10_000)))

    def validate(self) -> None:
        if self.instance_dir is None and not self.generate:
            raise ValidationFailure("manifest needs instance_dir or a generate block")
        if self.instance_dir is not None and not Path(self.instance_dir).is_dir():
            raise ValidationFailure(f"instance_dir does not exist: {self.instance_dir}")
        names = [m.name for m in self.machines]
        if sorted(names) != ["cold", "hot"]:
            raise ValidationFailure("manifest needs exactly two machines named hot and cold")
        for m in self.machines:
            if m.schedule is not None and not Path(m.schedule).exists():
                raise ValidationFailure(f"schedule file does not exist: {m.schedule}")
            try:
                m.profile()
            except (ScheduleError, ValueError) as e:
                raise ValidationFailure(f"machine {m.name}: {e}") from None
        if self.dos.get("mode", "wl") not in ("brute", "exact", "wl"):
            raise ValidationFailure(f"unknown dos mode {self.dos.get('mode')!r}")
        if self.workers < 1:
            raise ValidationFailure("workers must be >= 1")


def cmd_pipeline(args) -> int:
    man = RunManifest.load(args.manifest)
    if args.workers_given:
        man.workers = args.workers
    man.validate()
    out = Path(man.out)
    out.mkdir(parents=True, exist_ok=True)
    for g in man.generate:
        ns = argparse.Namespace(L=int(g["L"]), alpha=str(g["alpha"]), count=int(g.get("count", 100)),
                                j_max=g.get("j_max"), max_loop_len=int(g.get("max_loop_len", 16)),
                                no_mask=bool(g.get("no_mask", False)), seed=man.seed, out=str(out))
        _gen_append(ns)
    inst_dir = man.instance_dir or str(out / "instances")
    files = instance_files([inst_dir])
    d = man.dos
    wl = WlConfig(flatness=d.get("flatness", 0.8), f_final=d.get("f_final", 1e-8), runs=d.get("runs", 20),
                  flatness_check_interval=d.get("interval", 10_000), max_steps=d.get("max_steps", 10**9),
                  criterion=d.get("criterion", "lowest"))
    run_dos(files, out, d.get("mode", "wl"), int(d.get("cutoff", DEFAULT_CUTOFF)), wl, float(d.get("tol", 0.05)),
            man.seed, man.workers)
    alphas = _alphas(out)
    skipped = []
    for spec in sorted(man.machines, key=lambda m: m.name != "hot"):
        path = run_emulate(files, spec, out, man.seed, man.workers)
        _, sk = run_fit(path, spec, out, man.seed, alphas)
        skipped += sk
    rep = run_report(out / "records_hot.csv", out / "records_cold.csv", out, man.seed, man.q_small,
                     man.bootstrap, skipped)
    print(f"R_beta={rep.R_beta:.4f} CI=({rep.R_beta_ci[0]:.4f}, {rep.R_beta_ci[1]:.4f}) pairs={rep.n_pairs}")
    return EXIT_OK


def _gen_append(ns) -> None:
    """Run ``gen`` for one block, keeping index rows from earlier blocks."""
    out = Path(ns.out)
    idx = out / "index.csv"
    previous = read_csv(idx)[0] if idx.exists() else []
    cmd_gen(ns)
    if previous:
        rows, _ = read_csv(idx)
        header = tuple(rows[0].keys()) if rows else tuple(previous[0].keys())
        merged = {r["instance_id"]: r for r in previous + rows}
        write_csv(idx, header, [tuple(merged[k].values()) for k in sorted(merged)], ns.seed)


# -- argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_machine_flags(p) -> None:
    p.add_argument("--machine", default="hot")
    p.add_argument("--schedule", default=None, help="schedule CSV (default: bundled synthetic)")
    p.add_argument("--temperature-mK", dest="temperature_mK", type=float, default=None)
    p.add_argument("--linear", action="store_true", help="linear schedule interpolation")
    p.add_argument("--sigma-j", type=float, default=0.05)
    p.add_argument("--sigma-h", type=float, default=0.03)
    p.add_argument("--s-star-range", type=float, nargs=2, default=(0.6, 1.0))
    p.add_argument("--log-coeff", type=float, default=0.0)
    p.add_argument("--anneal-time", type=float, default=20.0, help="microseconds")
    p.add_argument("--anneals", type=int, default=20_000)
    p.add_argument("--cycles", type=int, default=22)
    p.add_argument("--method", choices=("auto", "exact", "eliminate", "mcmc"), default="auto")
    p.add_argument("--burn-in", type=int, default=1000, help="MCMC burn-in sweeps")
    p.add_argument("--thin", type=int, default=1, help="MCMC sweeps between samples")
    p.add_argument("--samples-per-chain", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    def globals_(defaults: bool):
        # subcommands repeat the global flags; SUPPRESS keeps them from clobbering earlier values
        q = _Parser(add_help=False)
        q.add_argument("--seed", type=int, default=0 if defaults else argparse.SUPPRESS)
        q.add_argument("--workers", type=int, default=None if defaults else argparse.SUPPRESS)
        q.add_argument("--out", default="out" if defaults else argparse.SUPPRESS)
        return q

    common = globals_(False)
    p = _Parser(prog="freezeout", description=__doc__.splitlines()[0], parents=[globals_(True)])
    p.add_argument("--version", action="version", version=f"freezeout {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate planted instances")
    g.add_argument("--L", type=int, required=True)
    g.add_argument("--alpha", required=True)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--j-max", type=int, default=None)
    g.add_argument("--max-loop-len", type=int, default=16)
    g.add_argument("--no-mask", action="store_true", help="full Chimera grid, no broken sites")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("dos", parents=[common], help="densities of states and validation")
    d.add_argument("instances", nargs="+")
    d.add_argument("--mode", choices=("brute", "exact", "wl"), default="wl")
    d.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
    d.add_argument("--tol", type=float, default=0.05)
    d.add_argument("--runs", type=int, default=20)
    d.add_argument("--f-final", type=float, default=1e-8)
    d.add_argument("--flatness", type=float, default=0.8)
    d.add_argument("--interval", type=int, default=10_000)
    d.add_argument("--max-steps", type=int, default=10**9)
    d.add_argument("--criterion", choices=("lowest", "min"), default="lowest")
    d.set_defaults(func=cmd_dos)

    e = sub.add_parser("emulate", parents=[common], help="emulate programming cycles")
    e.add_argument("instances", nargs="+")
    _add_machine_flags(e)
    e.set_defaults(func=cmd_emulate)

    f = sub.add_parser("fit", parents=[common], help="fit effective temperatures")
    f.add_argument("--results", default=None)
    f.add_argument("--fluct", choices=("std", "range"), default="std")
    _add_machine_flags(f)
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("report", parents=[common], help="cross-machine statistics and plot data")
    r.add_argument("--hot", default=None)
    r.add_argument("--cold", default=None)
    r.add_argument("--q-small", type=float, default=Q_SMALL)
    r.add_argument("--bootstrap", type=int, default=10_000)
    r.set_defaults(func=cmd_report)

    pl = sub.add_parser("pipeline", parents=[common], help="manifest-driven end-to-end run")
    pl.add_argument("manifest")
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.workers_given = args.workers is not None
    if args.workers is None:
        args.workers = 1
    if args.workers < 1:
        print("freezeout: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"freezeout: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationFailure, ScheduleError, InstanceError, json.JSONDecodeError, KeyError) as e:
        print(f"freezeout: validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"freezeout: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
