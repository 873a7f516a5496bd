"""Batch front end: ``uhfkit <command> --spec <path> [flags]``.

Exit codes: 0 every verdict passes, 2 a certified failure or counterexample,
3 a horizon was exhausted without a decision, 64 usage or schema error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, specdoc
from .errors import CertificateFailure, UhfError
from .groups import prufer_obstruction, trivial_intersection
from .gset import distinct_elements, fixed_points, induced_fixed_points, regroup_schedule, to_cycles
from .ktheory import (
    DirectLimitSystem,
    characters,
    crossed_product_diagram,
    direct_limit_invariants,
    exterior_ranks,
    k_invariants,
    pattern_actions,
)
from .rokhlin import (
    outerness_witness,
    random_staged_pair,
    rokhlin_classify,
    tower_synthesize,
    tower_verify,
    vanishing_trace_profile,
)
from .uhf import StageElement, stage_dim

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_USAGE = 0, 2, 3, 64
COMMANDS = ("analyze", "induce", "tower", "witness", "bratteli", "kgroups", "report")


class UsageError(UhfError):
    pass


def _status(verdict: str) -> str:
    if verdict in ("ProvenTrivial", "FiniteOrderRokhlin", "InfiniteOrderUniformlyOuter", "ProvenInfinite",
                   "UHF", "Verified", "Certified", "Consistent"):
        return "pass"
    if verdict.startswith("Unknown"):
        return "unknown"
    return "fail"


class Run:
    def __init__(self, spec: specdoc.Spec):
        self.spec = spec
        self.t = spec.task
        self.verdicts = []

    def verdict(self, check: str, verdict: str, **extra):
        self.verdicts.append({"check": check, "verdict": verdict, "status": _status(verdict), **extra})

    def _need_pattern(self, cmd):
        if self.spec.pattern is None:
            raise UsageError(f"'{cmd}' needs a pattern block")

    # -- commands ---------------------------------------------------------

    def analyze(self) -> dict:
        s, t = self.spec, self.t
        if s.prufer_p is not None:
            table = prufer_obstruction(s.prufer_p, t["max_modulus"])
            self.verdict("injective-pattern", "NoInjectivePattern",
                         detail=f"every modulus n <= {t['max_modulus']} kills 1/{s.prufer_p} at finite depth")
            return {"prufer": {"p": s.prufer_p, "kill_depth": {str(n): d for n, d in table.items()}}}
        if s.family is not None:
            fam, out = s.family, []
            e = fam.nf.identity()
            for w, x in distinct_elements(fam.nf, t["word_len"]):
                if x == e:
                    continue
                word = fam.nf.presentation.format(w)
                prof = vanishing_trace_profile(fam, x, t["horizon"])
                nonfree = [l for l, f in enumerate(prof.fixed, start=1) if f]
                out.append({"word": word, "verdict": prof.verdict, "nonfree_levels": nonfree})
                self.verdict(f"vanishing-trace {word}", prof.verdict)
            return {"vanishing_trace": out}
        self._need_pattern("analyze")
        iv = trivial_intersection(s.pattern, t["horizon"], t["box_bound"])
        self.verdict("trivial-intersection", iv.kind)
        out = {"intersection": iv.to_json(), "elements": []}
        G = s.group
        for g in s.elements():
            if G.is_zero(g):
                continue
            rv = rokhlin_classify(s.pattern, g, t["horizon"], t["power_bound"])
            prof = vanishing_trace_profile(s.pattern, g, t["horizon"])
            self.verdict(f"rokhlin {g}", rv.kind)
            out["elements"].append({"element": g.to_json(), "rokhlin": rv.to_json(),
                                    "vanishing_trace": {"verdict": prof.verdict,
                                                        "first_levels": list(prof.levels[:8])}})
        return out

    def induce(self) -> dict:
        s, t = self.spec, self.t
        if s.family is None:
            raise UsageError("'induce' needs an induced action block")
        fam = s.family
        pres = fam.nf.presentation
        e = fam.nf.identity()
        elems = [(pres.format(w), x) for w, x in distinct_elements(fam.nf, t["word_len"]) if x != e]
        levels = []
        for l in t["levels"]:
            act = fam.action(l)
            rows, nonfree = [], []
            for word, x in elems:
                direct = fixed_points(act, word)
                formula = induced_fixed_points(fam.transversal, fam.base_action(l), word)
                closed = fam.fixed_points(x, l)
                if not direct == formula == closed:
                    self.verdict(f"fixed-point identity {word} level {l}", "Inconsistent")
                rows.append({"word": word, "fixed": direct})
                if direct:
                    nonfree.append(word)
            self.verdict(f"induced action level {l}", "Verified",
                         points=act.n, relations=list(pres.relations))
            levels.append({
                "level": l,
                "points": act.n,
                "relations_hold": list(pres.relations),
                "generators": {name: to_cycles(p) for name, p in zip(pres.generators, act.perms)},
                "fixed_points": rows,
                "free_on_listed_words": not nonfree,
                "non_free_words": nonfree,
            })
        sched = regroup_schedule(fam, t["word_len"], min(t["horizon"], 16))
        for word in sched["missing"]:
            self.verdict(f"free level for {word}", "UnknownUpTo")
        return {
            "transversal": fam.transversal.to_json(),
            "levels": levels,
            "regroup": {
                "words": [w for w, _ in sched["elements"]],
                "selections": sched["selections"],
                "schedule": [[sched["elements"][i][0], l] for i, l in sched["schedule"]],
            },
        }

    def tower(self) -> dict:
        s, t = self.spec, self.t
        self._need_pattern("tower")
        G = s.group
        F = s.stage_elements()
        L = max([t["base_stage"]] + [x.stage for x in F])
        eps = specdoc.parse_rational(t["epsilon"])
        out = []
        for g in s.elements():
            if G.is_zero(g) or G.element_order(g) is None:
                continue
            try:
                tw = tower_synthesize(g, s.pattern, F, t["horizon"], base_stage=L, stage_cap=t["stage_cap"])
            except CertificateFailure as exc:
                self.verdict(f"tower {g}", "UnknownUpTo", missing=list(exc.missing))
                out.append({"element": g.to_json(), "error": str(exc)})
                continue
            rep = tower_verify(tw, g, s.pattern, F, eps)
            self.verdict(f"tower {g}", "Verified" if rep.passed and rep.orthogonal else "ToleranceExceeded")
            out.append({"element": g.to_json(), "tower": tw.to_json(), "verify": rep.to_json()})
        if not out:
            raise UsageError("'tower' needs an element of finite order")
        return {"base_stage": L, "towers": out}

    def witness(self) -> dict:
        s, t = self.spec, self.t
        self._need_pattern("witness")
        G, pat = s.group, s.pattern
        L = t["base_stage"]
        eps = specdoc.parse_rational(t["epsilon"])
        seq = pat.sequence()
        rng = np.random.default_rng(t["seed"])
        top = t["horizon"] if pat.horizon is None else min(t["horizon"], pat.horizon)
        out = []
        for g in s.elements():
            if G.is_zero(g):
                continue
            level = next((l for l in range(L + 1, top + 1) if pat.image_order(g, l) != 1), None)
            if level is None:
                self.verdict(f"witness {g}", "UnknownUpTo")
                out.append({"element": g.to_json(), "error": f"no level in ({L}, {top}] moves g"})
                continue
            stage_dim(seq, level, t["stage_cap"])
            p = StageElement.identity(seq, L)
            samples = []
            for _ in range(t["samples"]):
                a, _b = random_staged_pair(seq, L, level, eps, rng)
                w = outerness_witness(a, p, g, pat, eps, level, base_stage=L)
                samples.append({"achieved": w.achieved, "certified": w.certified, "sums_to_p": w.sums_to_p,
                                "widths": [b.width for b in w.brackets]})
            ok = all(x["certified"] and x["sums_to_p"] for x in samples)
            self.verdict(f"witness {g}", "Certified" if ok else "BoundExceeded")
            out.append({"element": g.to_json(), "level": level, "k": pat.image_order(g, level),
                        "bound": str(13 * eps), "samples": samples})
        return {"base_stage": L, "epsilon": str(eps), "witnesses": out}

    def bratteli(self) -> dict:
        s, t = self.spec, self.t
        self._need_pattern("bratteli")
        if not s.group.is_finite:
            raise UsageError("'bratteli' needs a finite group")
        table = characters(s.group.torsion)
        acts = pattern_actions(s.pattern, t["stages"])
        diagram, verdict = crossed_product_diagram(table, acts, s.pattern, t["horizon"])
        self.verdict("crossed product", verdict.kind)
        return {"diagram": diagram.to_json(), "text": diagram.to_text(), "verdict": verdict.to_json()}

    def kgroups(self) -> dict:
        s, t = self.spec, self.t
        if s.group is None:
            raise UsageError("'kgroups' needs an abelian group")
        k = k_invariants(s.group, rokhlin=t["rokhlin"])
        r = k.r
        if r:
            ev, od = exterior_ranks(r)
            agree = (ev, od) == k.ranks()
            self.verdict("K-ranks vs exterior algebra", "Consistent" if agree else "Inconsistent")
        out = {"invariants": k.to_json()}
        if s.pattern is not None:
            steps = t["limit_steps"]
            if s.pattern.horizon is not None:
                steps = min(steps, s.pattern.horizon)
            system = DirectLimitSystem.scalar(s.pattern.sequence().rule, steps)
            lim = direct_limit_invariants(system)
            self.verdict("K0 of the UHF algebra", "Verified" if lim.rank == 1 else "Inconsistent")
            out["uhf_k0"] = {"rank": lim.rank, "divisible_by": lim.divisible_primes(),
                             "certificate": lim.certificate}
        return out

    def report(self) -> dict:
        s = self.spec
        out = {"analyze": self.analyze()}
        if s.family is not None:
            out["induce"] = self.induce()
        if s.pattern is not None:
            G = s.group
            if any(not G.is_zero(g) and G.element_order(g) is not None for g in s.elements()):
                out["tower"] = self.tower()
            out["witness"] = self.witness()
            if G.is_finite:
                out["bratteli"] = self.bratteli()
        if s.group is not None:
            out["kgroups"] = self.kgroups()
        return out


def exit_code(verdicts) -> int:
    st = {v["status"] for v in verdicts}
    if "fail" in st:
        return EXIT_FAIL
    if "unknown" in st:
        return EXIT_UNKNOWN
    return EXIT_OK


def run(command: str, doc: dict, overrides: dict = None, timing: bool = False) -> dict:
    """Execute ``command`` on a spec document and return the report document."""
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    doc = json.loads(json.dumps(doc))  # private copy
    if overrides:
        doc.setdefault("task", {}).update({k: v for k, v in overrides.items() if v is not None})
    spec = specdoc.build(doc)
    r = Run(spec)
    t0 = time.perf_counter()
    results = getattr(r, command)()
    report = {
        "tool": "uhfkit",
        "version": __version__,
        "schema_version": specdoc.SCHEMA_VERSION,
        "command": command,
        "spec": doc,
        "task": spec.task,
        "results": results,
        "verdicts": r.verdicts,
        "exit_code": exit_code(r.verdicts),
    }
    if timing:
        report["timing_seconds"] = round(time.perf_counter() - t0, 3)
    return report


def render_text(report: dict) -> str:
    lines = [f"{report['tool']} {report['version']}  {report['command']}  spec={report['spec']['name']}"]
    res = report["results"]
    ind = res.get("induce") if report["command"] == "report" else (res if report["command"] == "induce" else None)
    if ind:
        for lv in ind["levels"]:
            lines.append(f"level {lv['level']}: {lv['points']} points; relations {', '.join(lv['relations_hold'])} hold")
            if lv["non_free_words"]:
                lines.append(f"  words with fixed points: {' '.join(lv['non_free_words'])}")
    br = res.get("bratteli") if report["command"] == "report" else (res if report["command"] == "bratteli" else None)
    if br:
        lines.append(br["text"].rstrip("\n"))
    for v in report["verdicts"]:
        lines.append(f"[{v['status']:>7}] {v['check']}: {v['verdict']}")
    lines.append(f"exit {report['exit_code']}")
    return "\n".join(lines) + "\n"


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _resolve_spec(arg: str) -> Path:
    p = Path(arg)
    if p.is_file():
        return p
    return specdoc.builtin_path(arg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uhfkit",
        description="Finite-stage certificates for group actions on UHF algebras.",
        epilog="built-in specs: " + ", ".join(specdoc.builtin_names()),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", required=True, help="spec JSON path or built-in name")
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--epsilon", help="rational, e.g. 1/100")
    parser.add_argument("--stage-cap", type=int)
    parser.add_argument("--word-len", type=int)
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--timing", action="store_true", help="add wall-clock time (breaks byte-identity)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    try:
        doc = specdoc.load(_resolve_spec(args.spec))
        overrides = {"horizon": args.horizon, "epsilon": args.epsilon,
                     "stage_cap": args.stage_cap, "word_len": args.word_len}
        report = run(args.command, doc, overrides, args.timing)
    except UhfError as exc:
        print(f"uhfkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"uhfkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = dumps(report) if args.format == "json" else render_text(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
