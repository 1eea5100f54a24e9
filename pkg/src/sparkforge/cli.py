"""sparkforge command-line driver.

Model files are JSON objects ``{"format": "sparkforge-model", "version": 1,
"kind": ..., "payload": ...}`` with every number written as an exact string.
A bare fixture name may be given wherever a file is expected.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from .cech_models import (MODEL_FIXTURES, TRIPLE_FIXTURES, CechModel, CoefficientSystem,
                          FormAlgebra, LatticeSpec, ModelError, Nerve)
from .chern_weil import (MatrixForm, Scenario, bott_pair, general_scenario,
                         hermitian_pair, is_hermitian, nadel, type_vanishing,
                         unipotent_scenario, verify_low_type_vanishing, verify_dbar_exact_component)
from .complexes import CochainComplex, ComplexError, ComplexMorphism
from .deligne import DeligneDoubleComplex, compare_products, deligne_cohomology
from .exact_linalg import QQi, SparseMatrix, qq, qstr
from .spark_core import SparkComplexTriple, TierError, grid_3x3

FORMAT = "sparkforge-model"
VERSION = 1
KINDS = ("complex", "triple", "cech-model", "matrix-form-scenario")
SCENARIOS = ("unipotent", "unipotent-normalized", "hermitian-pair", "bott-pair")


class InputError(ValueError):
    """Malformed model file or arguments (exit code 1)."""


# ---------------------------------------------------------------- encoding

def _vec_json(v: dict) -> dict:
    return {str(i): qstr(x) for i, x in sorted(v.items())}


def _matrix_json(m: SparseMatrix) -> list:
    return [[i, j, qstr(v)] for i, j, v in m.triplets()]


def _matrix_from(rows, cols, data) -> SparseMatrix:
    try:
        return SparseMatrix.from_triplets(rows, cols, [(int(i), int(j), qq(str(v))) for i, j, v in data])
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad matrix triplets: {exc}") from exc


def complex_to_json(C: CochainComplex) -> dict:
    out = {"ring": C.ring, "degrees": {str(k): n for k, n in sorted(C.degrees.items())},
           "diff": {str(k): _matrix_json(m) for k, m in sorted(C.diff.items())}}
    if C.ring == "mixed":
        out["zidx"] = {str(k): list(v) for k, v in sorted(C.zidx.items())}
    if C.lowest:
        out["lowest"] = C.lowest
    return out


def complex_from_json(d: dict) -> CochainComplex:
    try:
        degs = {int(k): int(n) for k, n in d["degrees"].items()}
        diff = {int(k): _matrix_from(degs.get(int(k) + 1, 0), degs.get(int(k), 0), m)
                for k, m in d.get("diff", {}).items()}
        zidx = {int(k): v for k, v in d.get("zidx", {}).items()}
        return CochainComplex(d["ring"], degs, diff, zidx, lowest=int(d.get("lowest", 0)))
    except KeyError as exc:
        raise InputError(f"complex missing field {exc}") from exc


def _morphism_json(m: ComplexMorphism) -> dict:
    return {str(k): _matrix_json(x) for k, x in sorted(m.maps.items())}


def _morphism_from(S, T, d) -> ComplexMorphism:
    return ComplexMorphism(S, T, {int(k): _matrix_from(T.rank(int(k)), S.rank(int(k)), m)
                                  for k, m in d.items()}, check=False)


def triple_to_json(T: SparkComplexTriple) -> dict:
    return {"name": T.name, "F": complex_to_json(T.F), "E": complex_to_json(T.E),
            "I": complex_to_json(T.I), "incl": _morphism_json(T.incl), "psi": _morphism_json(T.psi)}


def triple_from_json(d: dict) -> SparkComplexTriple:
    try:
        F, E, I = (complex_from_json(d[x]) for x in "FEI")
        return SparkComplexTriple(F, E, I, _morphism_from(E, F, d["incl"]), _morphism_from(I, F, d["psi"]),
                                  name=d.get("name", "triple"))
    except KeyError as exc:
        raise InputError(f"triple missing field {exc}") from exc


def _simplex_key(s):
    return ",".join(map(str, s))


def model_to_json(M: CechModel) -> dict:
    A = M.A
    twist = M.coeffs.twist
    lattice = None
    if M.lattice is not None:
        lattice = {str(s): [_sparse_qqi(g) for g in gens] for s, gens in sorted(M.lattice.gens.items())}
    glob = "sections" if M.global_spec == "sections" else {"tree-gauge": [list(e) for e in M.global_spec[1]]}
    ranks: dict = {}
    for b in range(len(A)):
        key = "%d,%d" % A.bidegree(b)
        ranks[key] = ranks.get(key, 0) + 1
    return {"name": M.name,
            "nerve": [list(s) for s in M.nerve.maximal()],
            "coeffs": {"algebra": {"n": A.n, "N": A.N, "polynomial": A.polynomial},
                       "bigraded_ranks": dict(sorted(ranks.items())),
                       "twist": None if not twist else {_simplex_key(s): t for s, t in sorted(twist.items())}},
            "lattice": lattice, "global": glob}


def _sparse_qqi(v: dict) -> list:
    return [[i, str(x)] for i, x in sorted(v.items())]


def model_from_json(d: dict) -> CechModel:
    try:
        nerve = Nerve([tuple(s) for s in d["nerve"]])
        a = d["coeffs"]["algebra"]
        A = FormAlgebra(int(a["n"]), a.get("N"), polynomial=bool(a.get("polynomial")))
        tw = d["coeffs"].get("twist")
        twist = None
        if tw:
            twist = {tuple(int(x) for x in k.split(",")): int(t) for k, t in tw.items()}
            missing = [s for s in nerve.simplices if s not in twist]
            if missing:
                raise InputError(f"twist missing simplices {missing[:3]}")
        C = CoefficientSystem(nerve, A, twist)
        L = None
        if d.get("lattice") is not None:
            L = LatticeSpec({int(s): [{int(i): QQi.parse(x) for i, x in g} for g in gens]
                             for s, gens in d["lattice"].items()})
        glob = d.get("global", "sections")
        if isinstance(glob, dict):
            glob = ("tree-gauge", [tuple(e) for e in glob["tree-gauge"]])
        elif glob != "sections":
            raise InputError(f"unknown global-form spec {glob!r}")
        return CechModel(nerve, C, L, glob, name=d.get("name", "model"))
    except (KeyError, TypeError) as exc:
        raise InputError(f"cech-model malformed: {exc}") from exc


def scenario_to_json(sc: Scenario) -> dict:
    return sc.to_json()


def scenario_from_json(d: dict) -> Scenario:
    try:
        sc = Scenario.from_json(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"scenario malformed: {exc}") from exc
    if sc.g.size != sc.H.size:
        raise InputError("g and H sizes differ")
    return sc


def wrap(kind: str, payload: dict) -> dict:
    return {"format": FORMAT, "version": VERSION, "kind": kind, "payload": payload}


def fixture_document(name: str) -> dict:
    if name in TRIPLE_FIXTURES:
        return wrap("triple", triple_to_json(TRIPLE_FIXTURES[name]()))
    if name in MODEL_FIXTURES:
        return wrap("cech-model", model_to_json(MODEL_FIXTURES[name]()))
    raise InputError(f"unknown fixture {name!r}")


def load_document(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        stem = p.stem if p.suffix == ".json" else path
        if stem in TRIPLE_FIXTURES or stem in MODEL_FIXTURES:
            return fixture_document(stem)
        raise InputError(f"no such file or fixture: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise InputError(f"{path}: not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise InputError(f"{path}: unsupported version {doc.get('version')}")
    if doc.get("kind") not in KINDS:
        raise InputError(f"{path}: unknown kind {doc.get('kind')!r}")
    if not isinstance(doc.get("payload"), dict):
        raise InputError(f"{path}: payload must be an object")
    return doc


def ingest(doc: dict):
    kind, d = doc["kind"], doc["payload"]
    try:
        if kind == "complex":
            return complex_from_json(d)
        if kind == "triple":
            return triple_from_json(d)
        if kind == "cech-model":
            return model_from_json(d)
        return scenario_from_json(d)
    except (ComplexError, ModelError) as exc:
        raise InputError(str(exc)) from exc


def export(obj) -> dict:
    if isinstance(obj, CochainComplex):
        return wrap("complex", complex_to_json(obj))
    if isinstance(obj, SparkComplexTriple):
        return wrap("triple", triple_to_json(obj))
    if isinstance(obj, CechModel):
        return wrap("cech-model", model_to_json(obj))
    if isinstance(obj, Scenario):
        return wrap("matrix-form-scenario", scenario_to_json(obj))
    raise TypeError(type(obj).__name__)


# ---------------------------------------------------------------- commands

class Falsified(Exception):
    def __init__(self, report):
        super().__init__("identity falsified")
        self.report = report


def _triple_of(obj, args) -> SparkComplexTriple:
    if isinstance(obj, SparkComplexTriple):
        return obj
    if isinstance(obj, CechModel):
        return obj.triple(args.level, args.hyper)
    raise InputError("command needs a triple or a cech-model")


def cmd_validate(obj, args):
    if isinstance(obj, CochainComplex):
        return {"kind": "complex", "valid": True, "ranks": {str(k): n for k, n in sorted(obj.degrees.items())}}
    if isinstance(obj, Scenario):
        rep = {"kind": "matrix-form-scenario", "hermitian": is_hermitian(obj.H)}
        try:
            obj.g.inverse()
            obj.H.inverse()
            rep["invertible"] = True
        except ValueError:
            rep["invertible"] = False
        rep["valid"] = rep["hermitian"] and rep["invertible"]
        if not rep["valid"]:
            raise Falsified(rep)
        return rep
    rep = {"kind": "triple" if isinstance(obj, SparkComplexTriple) else "cech-model"}
    if isinstance(obj, CechModel):
        obj.A.check()
        obj.coeffs.check()
    T = _triple_of(obj, args)
    v = T.validate()
    rep.update({"name": T.name, "tier": T.tier(), "requested_tier": args.tier, **v.as_dict()})
    allowed = {"axiom-1"} if args.tier == "model" else set()
    if set(v.failed_axioms()) - allowed:
        raise Falsified(rep)
    return rep


def cmd_cohomology(obj, args):
    k = args.degree
    if isinstance(obj, CochainComplex):
        return {"degree": k, "H": str(obj.cohomology(k).invariants)}
    T = _triple_of(obj, args)
    return {"name": T.name, "degree": k,
            **{f"H({x})": str(getattr(T, x).cohomology(k).invariants) for x in "FEI"}}


def cmd_spark_group(obj, args):
    T = _triple_of(obj, args)
    try:
        G = T.spark_group(args.degree, args.tier)
    except TierError as exc:
        raise InputError(str(exc)) from exc
    inv = G.invariants
    return {"name": T.name, "degree": args.degree, "tier": args.tier,
            "invariants": str(inv), "normal_form": inv.as_dict()}


def cmd_grid(obj, args):
    T = _triple_of(obj, args)
    g = grid_3x3(T, args.degree, args.tier)
    rep = {"name": T.name, **g.as_dict()}
    if not g.exact:
        raise Falsified(rep)
    return rep


def _generator(T, ident):
    try:
        k, j = (int(x) for x in ident.split(":"))
    except ValueError as exc:
        raise InputError(f"generator id must be 'degree:index', got {ident!r}") from exc
    gens = T.spark_group(k).generators
    if not 0 <= j < len(gens):
        raise InputError(f"spark group in degree {k} has {len(gens)} generators")
    return k, gens[j]


def cmd_product(obj, args):
    if not isinstance(obj, CechModel):
        raise InputError("product needs a cech-model")
    T = obj.triple(None)
    k, u = _generator(T, args.alpha)
    l, v = _generator(T, args.beta)
    w = obj.spark_product(k, u, l, v)
    m = k + l + 1
    H = T.spark_group(m)
    return {"name": T.name, "alpha": args.alpha, "beta": args.beta, "degree": m,
            "is_spark": T.is_spark(m, w), "zero_class": H.is_zero_class(w),
            "target_group": str(H.invariants), "representative": _vec_json(w)}


def cmd_deligne(obj, args):
    if not isinstance(obj, CechModel):
        raise InputError("deligne needs a cech-model")
    H = deligne_cohomology(obj, args.level, args.degree)
    return {"name": obj.name, "level": args.level, "degree": args.degree,
            "invariants": str(H.invariants), "normal_form": H.invariants.as_dict()}


def cmd_deligne_compare(obj, args):
    if not isinstance(obj, CechModel):
        raise InputError("deligne-compare needs a cech-model")
    rng = random.Random(args.seed)
    rows, ok = [], True
    cx = {}
    for _ in range(args.trials):
        p, q = rng.randint(1, args.max_level), rng.randint(1, args.max_level)
        k, l = rng.randint(1, args.max_degree), rng.randint(1, args.max_degree)
        for lv in (p, q):
            cx.setdefault(lv, DeligneDoubleComplex(obj, lv))
        x = cx[p].random_cocycle(k, rng)
        y = cx[q].random_cocycle(l, rng)
        c = compare_products(obj, x, y)
        rows.append(c.as_dict())
        ok &= c.identity_holds and c.classes_equal
    rep = {"name": obj.name, "seed": args.seed, "trials": args.trials, "all_passed": ok, "results": rows}
    if not ok:
        raise Falsified(rep)
    return rep


def _scenario(args, name):
    rng = random.Random(args.seed)
    cap = args.coordinate_cap
    if name == "unipotent":
        return unipotent_scenario(rng, args.k, args.dim, args.trunc, per_coordinate=cap)
    if name == "unipotent-normalized":
        return unipotent_scenario(rng, args.k, args.dim, args.trunc, identity_metric=True, per_coordinate=cap)
    if name == "hermitian-pair":
        return hermitian_pair(rng, args.k, args.dim, args.trunc, per_coordinate=cap)
    return bott_pair(rng, args.k, args.dim, args.trunc, per_coordinate=cap)


def cmd_transgress(args):
    name = args.scenario
    if name in SCENARIOS:
        sc = _scenario(args, name)
    else:
        obj = ingest(load_document(name))
        if not isinstance(obj, Scenario):
            raise InputError("transgress needs a scenario name or a matrix-form-scenario file")
        sc = obj
    rep = {"scenario": name, "k": args.k, "dim": args.dim, "trunc": args.trunc, "seed": args.seed, "checks": {}}
    ok = True
    if isinstance(sc, tuple):
        r = type_vanishing(sc[0], sc[1], args.k)
        rep["checks"]["type-vanishing"] = r.as_dict()
        ok &= r.ok
    else:
        r = verify_low_type_vanishing(sc, args.k)
        rep["checks"]["low-type-vanishing"] = r.as_dict()
        ok &= r.ok
        if sc.H == MatrixForm.identity(sc.H.size, sc.n, sc.W) and sc.meta.get("shape") == "unipotent":
            _, r2 = verify_dbar_exact_component(sc, args.k)
            rep["checks"]["dbar-exact-component"] = r2.as_dict()
            ok &= r2.ok
    rep["all_passed"] = ok
    if not ok:
        raise Falsified(rep)
    return rep


def cmd_nadel(args):
    rng = random.Random(args.seed)
    size = args.size or (3 if args.k >= 3 else 2)
    sc = general_scenario(rng, args.k, args.dim, args.trunc, size=size, per_coordinate=args.coordinate_cap,
                          terms=args.terms)
    res = nadel(sc)
    rep = {"k": args.k, "dim": args.dim, "trunc": args.trunc, "seed": args.seed, "size": size,
           "coordinate_cap": args.coordinate_cap, **res.as_dict()}
    if not res.match:
        raise Falsified(rep)
    return rep


def cmd_fixtures(args):
    if args.action == "list":
        return {"triples": sorted(TRIPLE_FIXTURES), "cech-models": sorted(MODEL_FIXTURES)}
    if not args.name:
        raise InputError("fixtures export needs a name (or 'all')")
    names = sorted(TRIPLE_FIXTURES) + sorted(MODEL_FIXTURES) if args.name == "all" else [args.name]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for n in names:
        path = out / f"{n}.json"
        path.write_text(dumps(fixture_document(n)) + "\n")
        written.append(str(path))
    return {"written": written}


# ---------------------------------------------------------------- driver

def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def _text(rep, indent=""):
    lines = []
    for k, v in rep.items():
        if isinstance(v, dict) and v and len(dumps(v)) > 70:
            lines.append(f"{indent}{k}:")
            lines.extend(_text(v, indent + "  "))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{indent}{k}: {len(v)} entries")
        else:
            lines.append(f"{indent}{k}: {v if not isinstance(v, (dict, list)) else json.dumps(v)}")
    return lines


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; here 2 is reserved for falsified identities
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sparkforge", description="Exact spark-complex and Chern–Weil computations.")
    ap.add_argument("--json", action="store_true", help="machine-readable report")
    ap.add_argument("--residual-out", default="sparkforge-residual.json",
                    help="where to write the report when an identity fails")
    sub = ap.add_subparsers(dest="command", required=True)

    def model_cmd(name, help_, degree=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file")
        if degree:
            p.add_argument("--degree", type=int, required=True)
        p.add_argument("--level", type=int, default=None, help="truncation level of a cech-model")
        p.add_argument("--hyper", action="store_true", help="use the lattice (hyperspark) integral part")
        return p

    p = model_cmd("validate", "check structure and spark axioms", degree=False)
    p.add_argument("--tier", choices=("strict", "model"), default="strict",
                   help="model tier tolerates a failing axiom 1")
    model_cmd("cohomology", "cohomology of a complex or of each part of a triple")
    p = model_cmd("spark-group", "spark class group")
    p.add_argument("--tier", choices=("strict", "model"), default="model")
    p = model_cmd("grid", "3x3 grid exactness")
    p.add_argument("--tier", choices=("strict", "model"), default="model")
    p = sub.add_parser("product", help="product of two spark-group generators")
    p.add_argument("file")
    p.add_argument("--alpha", required=True, help="degree:index")
    p.add_argument("--beta", required=True, help="degree:index")
    p = sub.add_parser("deligne", help="Deligne cohomology of a cech-model")
    p.add_argument("file")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p = sub.add_parser("deligne-compare", help="compare cup and spark products on random cocycles")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-level", type=int, default=2)
    p.add_argument("--max-degree", type=int, default=4)

    def form_flags(p):
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--dim", type=int, required=True)
        p.add_argument("--trunc", type=int, default=2)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--coordinate-cap", type=int, default=None)

    p = sub.add_parser("transgress", help="transgression identities on a scenario")
    p.add_argument("scenario", help=f"one of {', '.join(SCENARIOS)} or a scenario file")
    form_flags(p)
    p = sub.add_parser("nadel", help="(0,2k-1) part of the transgression against its closed form")
    form_flags(p)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--terms", type=int, default=1)
    p = sub.add_parser("fixtures", help="list or export built-in fixtures")
    p.add_argument("action", choices=("list", "export"))
    p.add_argument("name", nargs="?")
    p.add_argument("--out", default="fixtures")
    return ap


def run(argv=None) -> tuple[int, dict]:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except InputError as exc:
        return 1, {"command": None, "status": "error", "error": str(exc)}
    handlers = {"validate": cmd_validate, "cohomology": cmd_cohomology, "spark-group": cmd_spark_group,
                "grid": cmd_grid, "product": cmd_product, "deligne": cmd_deligne,
                "deligne-compare": cmd_deligne_compare}
    try:
        if args.command in handlers:
            obj = ingest(load_document(args.file))
            rep = handlers[args.command](obj, args)
        elif args.command == "transgress":
            rep = cmd_transgress(args)
        elif args.command == "nadel":
            rep = cmd_nadel(args)
        else:
            rep = cmd_fixtures(args)
    except Falsified as f:
        rep = {"command": args.command, "status": "falsified", **f.report}
        Path(args.residual_out).write_text(dumps(rep) + "\n")
        return 2, rep
    except (InputError, ComplexError, ModelError, ValueError, ZeroDivisionError) as exc:
        return 1, {"command": args.command, "status": "error", "error": str(exc)}
    return 0, {"command": args.command, "status": "ok", **rep}


def main(argv=None) -> int:
    code, rep = run(argv)
    args = sys.argv[1:] if argv is None else argv
    if "--json" in args:
        print(dumps(rep))
    else:
        print("\n".join(_text(rep)))
    return code


if __name__ == "__main__":
    sys.exit(main())
