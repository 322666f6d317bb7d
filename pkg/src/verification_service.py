"""Verification service and command-line interface for qaffine."""

import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click

from .config import (
    ConfigError,
    RunConfig,
    Settings,
    load_settings,
    parse_lambda,
    parse_rational,
    parse_subset,
    setup_logging,
)
from .heisenberg import (
    HeisenbergError,
    PhiSignature,
    check_quotient_brackets,
    finite_components,
    good_basis,
    irreducible_iff_level,
    iso_equivalent,
    iso_witness,
    lemma_checks,
    phi_character,
    phi_verma,
)
from .modules import (
    IdealWitness,
    InducedModule,
    ModuleError,
    SPlusQuotient,
    TruncatedModule,
    TruncationWindow,
    character_compare,
    generalized_induce,
    h_minus_two_witness,
    ideal_round_trip,
    induce,
    leading_term_module,
    quotient_by_ideal,
    radical_by_reach,
    reach_top,
    reducibility_witness,
    s_monomials,
    s_plus_ideal,
    simple_quotient,
    singular_vectors,
    top_weight,
    verify_leading_terms,
    weight_label,
)
from .pbw import PBWError, UEElement
from .roots import (
    Gen,
    PositiveSystem,
    RootError,
    SubalgebraSpec,
    Weight,
    contains,
    det_D_delta,
    reference_det,
    sample_generic_weight,
)
from .superalgebra import AlgebraError, check_loop_consistency, check_super_jacobi

logger = logging.getLogger(__name__)

SUITES = ("jacobi", "char", "heis", "dets", "singvec", "reach", "lemma4", "ideals")
USAGE_ERRORS = (ConfigError, RootError, ModuleError, HeisenbergError, PBWError, AlgebraError)
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


@dataclass
class Check:
    """One verified statement with its inputs, expectation and outcome."""

    name: str
    inputs: Dict[str, Any]
    expected: Any
    got: Any
    passed: bool
    note: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "inputs": self.inputs,
            "expected": self.expected,
            "got": self.got,
            "passed": self.passed,
        }
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class SuiteReport:
    suite: str
    window: Dict[str, int]
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "window": self.window,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _weight_text(lam: Weight) -> Dict[str, Any]:
    return {**lam.to_dict(), "delta_degree": 0}


def _dims_text(dims: Dict[Any, int]) -> Dict[str, int]:
    return {str(k): v for k, v in dims.items()}


class VerificationService:
    """Builds constructions from a RunConfig and runs verification suites."""

    def __init__(self, settings: Settings, run: RunConfig):
        """
        Initialize the verification service.

        Args:
            settings: Process-wide settings
            run: Parsed inputs of this invocation
        """
        self.settings = settings
        self.run = run
        self.system = PositiveSystem(run.n, run.subset)
        self.window = TruncationWindow(run.len_bound, run.loop_bound, run.depth, run.slack)
        self._suites: Dict[str, Callable[[SuiteReport], None]] = {
            "jacobi": self._suite_jacobi,
            "char": self._suite_char,
            "heis": self._suite_heis,
            "dets": self._suite_dets,
            "singvec": self._suite_singvec,
            "reach": self._suite_reach,
            "lemma4": self._suite_lemma4,
            "ideals": self._suite_ideals,
        }

    # -- shared constructions ----------------------------------------------

    def weight(self, offset: int = 0) -> Weight:
        """The --lambda weight, or a seeded generic weight."""
        if self.run.h_values is not None:
            return Weight(self.run.h_values, self.run.d_value)
        return sample_generic_weight(self.run.n, self.system, self.run.seed + offset)

    def spec(self, sid: str) -> SubalgebraSpec:
        return SubalgebraSpec(sid, self.system)

    def simple_levi_module(self, lam: Weight) -> TruncatedModule:
        """L(m_hat, lambda): the S^+ quotient for X empty, the reachable quotient otherwise."""
        verma = induce(self.spec("m_hat"), lam, self.window)
        method = "reach" if self.system.X else "s_plus"
        return simple_quotient(verma, method=method)

    def build(self, alg: str, via: Optional[str], lam: Weight) -> TruncatedModule:
        """
        Construction selected by --alg and --via.

        Raises:
            ModuleError: For combinations without a construction
        """
        ids = {"g": "g_hat", "m": "m_hat", "k": "k_hat", "H": "H_cal"}
        if alg not in ids:
            raise ModuleError(f"Unknown algebra {alg!r}")
        if via is None:
            return induce(self.spec(ids[alg]), lam, self.window)
        if alg == "g" and via == "m":
            return generalized_induce(self.spec("g_hat"), self.simple_levi_module(lam), self.window)
        if alg == "m" and via == "k":
            inner = induce(self.spec("k_hat"), lam, self.window)
            return generalized_induce(self.spec("m_hat"), inner, self.window)
        raise ModuleError(f"No construction of {alg} via {via}")

    def weight_table(self, module: TruncatedModule, lam: Weight) -> Dict[str, Any]:
        det = det_D_delta(self.system)
        rows = [
            {"weight": weight_label(lam, mu), "dim": module.dim(mu), "exact_slice": module.is_exact(mu)}
            for mu in module.weights()
        ]
        singular = []
        top = top_weight(self.run.n)
        for mu in module.weights():
            if mu == top or not module.is_exact(mu):
                continue
            report = singular_vectors(module, mu)
            if report.vectors:
                singular.append({"weight": weight_label(lam, mu), "count": len(report.vectors)})
        return {
            "construction": module.label,
            "lambda": _weight_text(lam),
            "det_value": str(det.evaluate(lam)),
            "window": self.window.to_dict(),
            "weight_table": rows,
            "singular": singular,
        }

    # -- suites -------------------------------------------------------------

    def run_suite(self, suite: str) -> SuiteReport:
        """
        Run one verification suite.

        Raises:
            ConfigError: If the suite name is unknown
        """
        runner = self._suites.get(suite)
        if runner is None:
            raise ConfigError(f"Unknown suite {suite!r}; choose from {', '.join(SUITES)}")
        report = SuiteReport(suite, self.window.to_dict())
        logger.info(f"Running suite {suite} for n={self.run.n}, X={self.system.label()}")
        runner(report)
        logger.info(
            f"Suite {suite}: {sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed"
        )
        return report

    def _map(self, fn: Callable[[int], List[Check]], items: List[int]) -> List[Check]:
        """Apply fn to independent items, on worker threads when configured; keeps item order."""
        if self.settings.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as pool:
                chunks = list(pool.map(fn, items))
        else:
            chunks = [fn(item) for item in items]
        return [check for chunk in chunks for check in chunk]

    def _suite_jacobi(self, report: SuiteReport) -> None:
        n = self.run.n
        bound = int(self.run.extra.get("deg") or self.run.loop_bound)
        jacobi = check_super_jacobi(bound, n)
        report.checks.append(
            Check(
                "super_jacobi",
                {"n": n, "degree_bound": bound, "triples": jacobi.checked},
                0,
                len(jacobi.violations),
                jacobi.passed,
            )
        )
        mismatches = check_loop_consistency(bound, n)
        report.checks.append(
            Check("loop_consistency", {"n": n, "degree_bound": bound}, 0, len(mismatches), not mismatches)
        )

    def _suite_dets(self, report: SuiteReport) -> None:
        det = det_D_delta(self.system)
        reference = reference_det(self.system)
        inputs = {"n": self.run.n, "X": self.system.label()}
        if not self.system.X:
            report.checks.append(
                Check("det_D_delta", inputs, str(reference), str(det), det == reference)
            )
        else:
            note = None
            if reference is not None and det != reference:
                note = f"direct pairing gives {det}; quoted closed form is {reference}"
            report.checks.append(
                Check(
                    "det_D_delta",
                    inputs,
                    str(reference) if reference is not None else "nonzero polynomial",
                    str(det),
                    not det.is_zero(),
                    note,
                )
            )
        lam = sample_generic_weight(self.run.n, self.system, self.run.seed)
        value = det.evaluate(lam)
        report.checks.append(
            Check("generic_weight", {**inputs, "lambda": _weight_text(lam)}, "nonzero", str(value), value != 0)
        )

    def _suite_char(self, report: SuiteReport) -> None:
        lam = self.weight()
        verma = induce(self.spec("H_cal"), lam, self.window)
        simple = simple_quotient(verma, method="s_plus")
        levi = self.simple_levi_module(lam)
        for module, formula in ((verma, "M_H"), (simple, "L_H"), (levi, "L_m")):
            result = character_compare(module, formula)
            report.checks.append(
                Check(
                    f"character_{formula}",
                    {"construction": module.label, "lambda": _weight_text(lam)},
                    {"mismatches": 0},
                    {
                        "compared": result.compared,
                        "skipped": result.skipped,
                        "mismatches": [
                            {"weight": weight_label(lam, mu), "computed": got, "expected": want}
                            for mu, got, want in result.mismatches
                        ],
                    },
                    result.passed and result.compared > 0,
                )
            )

    def _suite_heis(self, report: SuiteReport) -> None:
        n, depth = self.run.n, self.run.depth
        a = Fraction(self.run.extra.get("a", 1))
        q = good_basis(n)
        t = q.t
        failures = check_quotient_brackets(q, depth)
        report.checks.append(
            Check("quotient_brackets", {"n": n, "bound": depth}, 0, len(failures), not failures)
        )
        plus = PhiSignature.constant(t, "+")
        minus = PhiSignature.constant(t, "-")
        flipped = plus.flip(0, 1)
        signatures = [plus, minus, flipped]
        if self.run.extra.get("phi"):
            signatures.append(PhiSignature.parse(self.run.extra["phi"], t))
        for phi in signatures:
            module = phi_verma(q, phi, a, depth)
            lemma = lemma_checks(module)
            report.checks.append(
                Check(
                    "d_operator_lemma",
                    {"phi": str(phi), "a": str(a), "depth": depth},
                    {"quadratic_failures": 0, "implication_failures": 0},
                    {
                        "checked": lemma.checked,
                        "quadratic_failures": len(lemma.quadratic_failures),
                        "implication_failures": len(lemma.implication_failures),
                    },
                    lemma.passed,
                )
            )
            expected = phi_character(phi, depth)
            report.checks.append(
                Check(
                    "grassmann_character",
                    {"phi": str(phi), "depth": depth},
                    _dims_text(expected),
                    _dims_text(module.dims()),
                    module.dims() == expected,
                )
            )
            for level in (a, Fraction(0)):
                irreducible = irreducible_iff_level(q, phi, level, depth)
                if level:
                    ok = irreducible.irreducible
                else:
                    ok = len(irreducible.proper_submodule) == len(module.basis()) - 1
                report.checks.append(
                    Check(
                        "irreducible_iff_level",
                        {"phi": str(phi), "a": str(level), "depth": depth},
                        bool(level),
                        irreducible.irreducible,
                        ok,
                    )
                )
        witness = iso_witness(q, plus, 0, 1, a, depth)
        report.checks.append(
            Check(
                "iso_witness",
                {"phi": str(plus), "flip": [0, 1], "a": str(a)},
                {"equivalent": True, "witness_highest": True},
                {
                    "equivalent": iso_equivalent(plus, a, witness.flipped, a),
                    "witness_highest": witness.passed,
                },
                witness.passed and iso_equivalent(plus, a, witness.flipped, a),
            )
        )
        report.checks.append(
            Check(
                "iso_inequivalent",
                {"phi": [str(plus), str(minus)], "a": str(a)},
                False,
                iso_equivalent(plus, a, minus, a),
                not iso_equivalent(plus, a, minus, a),
            )
        )
        alternating = PhiSignature((), (("+",) * t, ("-",) + ("+",) * (t - 1)))
        components = finite_components(alternating, (5, 9))
        counts = components.cycle_counts
        report.checks.append(
            Check(
                "finite_components",
                {"phi": str(alternating), "windows": [5, 9]},
                {"finite": False, "strictly_increasing": True},
                {"finite": components.finite, "cycle_counts": _dims_text(counts)},
                not components.finite and counts[5] < counts[9],
            )
        )

    def _suite_singvec(self, report: SuiteReport) -> None:
        lam = self.weight()
        h_two = Gen("hU", 1, 0, -2)
        for sid in ("g_hat", "m_hat", "k_hat", "H_cal"):
            if sid == "k_hat" and not self.system.X:
                continue
            module = induce(self.spec(sid), lam, self.window)
            inputs = {"construction": module.label, "lambda": _weight_text(lam)}
            if contains(self.spec(sid), h_two) and h_two in module.free_gens:
                vector, killed = h_minus_two_witness(module)
                unreachable = reach_top(module, vector) is None
                report.checks.append(
                    Check(
                        "h_minus_two_witness",
                        inputs,
                        {"singular": True, "reach_top": "not-found"},
                        {"singular": killed, "reach_top": "not-found" if unreachable else "found"},
                        killed and unreachable and bool(vector),
                    )
                )
                continue
            witness = reducibility_witness(module)
            got = None
            if witness is not None:
                got = {
                    "weight": weight_label(lam, witness.weight),
                    "kind": witness.kind,
                    "definitive": witness.definitive,
                }
            report.checks.append(
                Check("reducibility_witness", inputs, "proper submodule", got, witness is not None)
            )

    def _reach_checks(self, offset: int) -> List[Check]:
        lam = self.weight(offset)
        module = generalized_induce(self.spec("g_hat"), self.simple_levi_module(lam), self.window)
        top = top_weight(self.run.n)
        unreachable = []
        certificates = 0
        singular, uncertified = [], []
        cleared = 0
        for mu in module.weights():
            for key in module.basis(mu):
                if reach_top(module, {key: Fraction(1)}) is None:
                    unreachable.append(weight_label(lam, mu))
                else:
                    certificates += 1
            if mu == top:
                continue
            if module.is_exact(mu):
                if singular_vectors(module, mu).vectors:
                    singular.append(weight_label(lam, mu))
                else:
                    cleared += 1
            elif radical_by_reach(module, mu):
                uncertified.append(weight_label(lam, mu))
            else:
                # every vector of the stored slice reaches v_lambda, so none is singular
                cleared += 1
        inputs = {"construction": module.label, "lambda": _weight_text(lam), "seed_offset": offset}
        return [
            Check("all_vectors_reach_top", inputs, 0, {"certified": certificates, "unreachable": unreachable}, not unreachable),
            Check(
                "no_singular_vectors",
                inputs,
                {"singular": [], "cleared_slices": ">0"},
                {"singular": singular, "cleared_slices": cleared, "uncertified": uncertified},
                not singular and cleared > 0,
                "uncertified slices are window-limited, not singular" if uncertified else None,
            ),
        ]

    def _suite_reach(self, report: SuiteReport) -> None:
        offsets = [0] if self.run.h_values is not None else list(range(5))
        report.checks.extend(self._map(self._reach_checks, offsets))

    def _suite_lemma4(self, report: SuiteReport) -> None:
        if self.system.X:
            raise ConfigError("The leading-term suite runs with X empty")
        lam = self.weight()
        module = leading_term_module(lam, self.window)

        def f(i: int, k: int) -> Gen:
            return Gen("E", i + 1, i, k)

        instances = [
            ([f(1, -2)], 0, -1),
            ([f(1, -2), f(1, -2)], 0, -1),
            ([f(1, -2), f(2, -2)], 0, -3),
            ([f(1, -1)], 0, -2),
            ([f(1, -2), f(1, -1)], 0, -2),
            ([f(1, -2), f(1, -1)], 1, -2),
        ]
        for fbar, l, m in instances:
            result = verify_leading_terms(fbar, l, m, module)
            report.checks.append(
                Check(
                    f"leading_terms_{result.part}",
                    {"fbar": result.fbar, "l": l, "m": m, "lambda": _weight_text(lam)},
                    "derived congruence",
                    {"derived_agrees": result.derived_agrees, "printed_agrees": result.printed_agrees},
                    result.derived_agrees,
                )
            )

    def ideal_module(self, lam: Weight) -> InducedModule:
        """M(m_hat, lambda) for X empty, M(m_hat, k_hat; L(k_hat, lambda)) otherwise."""
        if not self.system.X:
            return induce(self.spec("m_hat"), lam, self.window)
        levi = simple_quotient(induce(self.spec("k_hat"), lam, self.window))
        return generalized_induce(self.spec("m_hat"), levi, self.window)

    def seeded_ideal(self, module: InducedModule, seed: int) -> IdealWitness:
        """One or two homogeneous random elements of S inside the window."""
        rng = random.Random(seed * 7919 + 17)
        s_weights = [mu for mu in module.weights() if mu != top_weight(module.n) and s_monomials(module, mu)]
        if not s_weights:
            raise ModuleError("The window holds no S monomials; raise --depth or --len-bound")
        generators = []
        for _ in range(rng.randint(1, 2)):
            mu = rng.choice(s_weights)
            words = s_monomials(module, mu)
            coeffs = [Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in words]
            if not any(coeffs):
                coeffs[0] = Fraction(1)
            generators.append(UEElement(dict(zip(words, coeffs))))
        return IdealWitness(generators)

    def _suite_ideals(self, report: SuiteReport) -> None:
        lam = self.weight()
        module = self.ideal_module(lam)
        for index in range(5):
            ideal = self.seeded_ideal(module, self.run.seed + index)
            differences = ideal_round_trip(module, ideal)
            report.checks.append(
                Check(
                    "ideal_round_trip",
                    {"construction": module.label, "seed": self.run.seed + index, "generators": len(ideal)},
                    [],
                    [weight_label(lam, mu) for mu in differences],
                    not differences,
                )
            )
        quotient = SPlusQuotient(module, module.label.replace("M(", "L(", 1))
        by_ideal = quotient_by_ideal(module, s_plus_ideal(module))
        mismatched = [
            mu for mu in module.weights() if module.is_exact(mu) and by_ideal.dim(mu) != quotient.dim(mu)
        ]
        report.checks.append(
            Check(
                "s_plus_by_ideal",
                {"construction": module.label},
                [],
                [weight_label(lam, mu) for mu in mismatched],
                not mismatched,
            )
        )
        proper = quotient.dim(top_weight(module.n)) == 1
        maximal: Optional[bool] = None
        if not self.system.X:
            maximal = all(
                not radical_by_reach(quotient, mu) for mu in quotient.weights() if quotient.is_exact(mu)
            )
        report.checks.append(
            Check(
                "s_plus_maximal",
                {"construction": module.label},
                {"proper": True, "maximal": True if maximal is not None else None},
                {"proper": proper, "maximal": maximal},
                proper and maximal is not False,
                None if maximal is not None else "maximality is checked for X empty only",
            )
        )


# Output


def render(payload: Dict[str, Any], output_format: str) -> str:
    """JSON with sorted keys, or one TSV row per check / weight row."""
    if output_format == "json":
        return json.dumps(payload, indent=2, sort_keys=True)
    lines: List[str] = []
    for suite in payload.get("suites", []):
        for check in suite["checks"]:
            lines.append(
                "\t".join(
                    [
                        suite["suite"],
                        check["name"],
                        "pass" if check["passed"] else "FAIL",
                        json.dumps(check["expected"], sort_keys=True),
                        json.dumps(check["got"], sort_keys=True),
                    ]
                )
            )
    for row in payload.get("weight_table", []):
        weight = row["weight"]
        lines.append(
            "\t".join(
                [",".join(weight["h"]), weight["d"], str(weight["delta_degree"]), str(row["dim"]), str(row["exact_slice"])]
            )
        )
    for degree, dim in payload.get("dims", {}).items():
        lines.append(f"{degree}\t{dim}")
    return "\n".join(lines)


def emit(payload: Dict[str, Any], run: RunConfig) -> None:
    text = render(payload, run.output_format)
    if run.output:
        run.output.parent.mkdir(parents=True, exist_ok=True)
        run.output.write_text(text + "\n")
        logger.info(f"Report written to {run.output}")
    else:
        click.echo(text)


# CLI Commands


def run_options(command: Callable) -> Callable:
    """Flags shared by every construction and verification command."""
    options = [
        click.option("--n", "n", type=int, default=None, help="Rank n >= 3"),
        click.option("--x", "x", default="", help="Simple roots in X, e.g. '1,3'"),
        click.option("--lambda", "lam", default=None, help="Weight 'h_1,...,h_n;d'"),
        click.option("--depth", type=int, default=None, help="Deepest delta-degree"),
        click.option("--loop-bound", type=int, default=None, help="Largest |loop degree|"),
        click.option("--len-bound", type=int, default=None, help="Longest PBW monomial"),
        click.option("--slack", type=int, default=None, help="Extra delta range for raising searches"),
        click.option("--seed", type=int, default=0, help="Seed for weight sampling"),
        click.option("--format", "output_format", type=click.Choice(["json", "tsv"]), default="json"),
        click.option("--out", type=click.Path(path_type=Path), default=None, help="Write the report here"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def make_run_config(settings: Settings, **kwargs: Any) -> RunConfig:
    """
    Build a RunConfig from CLI flags, filling gaps from settings.

    Raises:
        ConfigError: On malformed flags
    """
    n = kwargs.pop("n") or settings.default_rank
    lam = kwargs.pop("lam")
    h_values, d_value = parse_lambda(lam, n) if lam else (None, Fraction(0))
    return RunConfig(
        n=n,
        subset=parse_subset(kwargs.pop("x"), n),
        h_values=h_values,
        d_value=d_value,
        loop_bound=kwargs.pop("loop_bound") or settings.loop_bound,
        len_bound=kwargs.pop("len_bound") or settings.len_bound,
        depth=kwargs.pop("depth") or settings.depth,
        slack=kwargs.pop("slack") or settings.slack,
        seed=kwargs.pop("seed"),
        output=kwargs.pop("out"),
        output_format=kwargs.pop("output_format"),
        extra={k: v for k, v in kwargs.items() if v is not None},
    )


def invoke(ctx: click.Context, action: Callable[[VerificationService], Dict[str, Any]], **kwargs: Any) -> Dict[str, Any]:
    """Parse flags, run an action and emit its payload; usage errors exit 1."""
    settings: Settings = ctx.obj["settings"]
    try:
        run = make_run_config(settings, **kwargs)
        service = VerificationService(settings, run)
        payload = action(service)
    except USAGE_ERRORS as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    emit(payload, run)
    return payload


@click.group()
@click.option(
    "--config",
    "-c",
    type=click.Path(exists=True, path_type=Path),
    help="Path to .env configuration file",
)
@click.pass_context
def cli(ctx: click.Context, config: Optional[Path]) -> None:
    """qaffine: modules over the twisted affine queer Lie superalgebra."""
    ctx.ensure_object(dict)
    try:
        settings = load_settings(config)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    setup_logging(settings)
    ctx.obj["settings"] = settings


@cli.command()
@click.argument("suite", type=click.Choice(list(SUITES) + ["all"]))
@click.option("--deg", type=int, default=None, help="Loop degree bound for the Jacobi sweep")
@click.option("--phi", default=None, help="Extra phi 'prefix|tail' for the Heisenberg suite")
@click.option("--a", "a", default=None, help="Level a for the Heisenberg suite")
@run_options
@click.pass_context
def verify(ctx: click.Context, suite: str, **kwargs: Any) -> None:
    """Run a verification suite; exit 0 on pass, 2 on failure, 1 on bad input."""
    if kwargs.get("a") is not None:
        try:
            kwargs["a"] = parse_rational(kwargs["a"])
        except ConfigError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_USAGE)
    names = list(SUITES) if suite == "all" else [suite]

    def action(service: VerificationService) -> Dict[str, Any]:
        reports = [service.run_suite(name) for name in sorted(names)]
        return {"passed": all(r.passed for r in reports), "suites": [r.to_dict() for r in reports]}

    payload = invoke(ctx, action, **kwargs)
    sys.exit(EXIT_OK if payload["passed"] else EXIT_FAILED)


@cli.command(name="induce")
@click.option("--alg", type=click.Choice(["g", "m", "k", "H"]), default="g")
@click.option("--via", type=click.Choice(["m", "k"]), default=None, help="Generalized induction through m_hat or k_hat")
@run_options
@click.pass_context
def induce_cmd(ctx: click.Context, alg: str, via: Optional[str], **kwargs: Any) -> None:
    """Build a (generalized) Verma-type module and print its weight table."""

    def action(service: VerificationService) -> Dict[str, Any]:
        lam = service.weight()
        return service.weight_table(service.build(alg, via, lam), lam)

    invoke(ctx, action, **kwargs)


@cli.command()
@click.option("--alg", type=click.Choice(["H", "m"]), default="H")
@click.option("--simple", is_flag=True, help="Use the simple quotient")
@run_options
@click.pass_context
def char(ctx: click.Context, alg: str, simple: bool, **kwargs: Any) -> None:
    """Graded dimensions by delta-degree, with the product-formula comparison."""

    def action(service: VerificationService) -> Dict[str, Any]:
        lam = service.weight()
        if alg == "H":
            module: TruncatedModule = induce(service.spec("H_cal"), lam, service.window)
            formula = "M_H"
            if simple:
                module, formula = simple_quotient(module, method="s_plus"), "L_H"
        else:
            module, formula = service.simple_levi_module(lam), "L_m"
        result = character_compare(module, formula)
        return {
            "construction": module.label,
            "lambda": _weight_text(lam),
            "formula": formula,
            "dims": _dims_text(module.delta_dims()),
            "compared": result.compared,
            "skipped": result.skipped,
            "passed": result.passed,
        }

    invoke(ctx, action, **kwargs)


@cli.command()
@click.argument("what", type=click.Choice(["phi-verma", "components", "iso"]))
@click.option("--phi", "phi_text", default=None, help="phi as 'prefix|tail'; all-plus by default")
@click.option("--a", "a", default="1", help="Level a (value of K)")
@click.option("--r", "r", type=int, default=0, help="Level of the flip for 'iso'")
@click.option("--j", "j", type=int, default=1, help="Family of the flip for 'iso'")
@run_options
@click.pass_context
def heis(ctx: click.Context, what: str, phi_text: Optional[str], a: str, r: int, j: int, **kwargs: Any) -> None:
    """Heisenberg quotient: phi-Verma dims, finiteness of components, isomorphism witness."""

    def action(service: VerificationService) -> Dict[str, Any]:
        q = good_basis(service.run.n)
        phi = PhiSignature.parse(phi_text, q.t) if phi_text else PhiSignature.constant(q.t, "+")
        level = parse_rational(a)
        depth = service.run.depth
        if what == "phi-verma":
            module = phi_verma(q, phi, level, depth)
            return {
                "phi": str(phi),
                "a": str(level),
                "gram": [str(c) for c in q.gram],
                "dims": _dims_text(module.dims()),
                "expected_dims": _dims_text(phi_character(phi, depth)),
            }
        if what == "components":
            windows = (depth, 2 * depth + 1)
            components = finite_components(phi, windows)
            return {"phi": str(phi), "finite": components.finite, "cycle_counts": _dims_text(components.cycle_counts)}
        witness = iso_witness(q, phi, r, j, level, depth)
        return {
            "phi": str(phi),
            "flipped": str(witness.flipped),
            "equivalent": iso_equivalent(phi, level, witness.flipped, level),
            "witness": {"nonzero": witness.nonzero, "highest": witness.highest, "eigen_match": witness.eigen_match},
        }

    invoke(ctx, action, **kwargs)


@cli.command()
@run_options
@click.pass_context
def dets(ctx: click.Context, **kwargs: Any) -> None:
    """det D_delta^X as a polynomial, with the quoted closed form where known."""

    def action(service: VerificationService) -> Dict[str, Any]:
        det = det_D_delta(service.system)
        reference = reference_det(service.system)
        payload: Dict[str, Any] = {
            "n": service.run.n,
            "X": service.system.label(),
            "det": str(det),
            "reference": str(reference) if reference is not None else None,
        }
        if service.run.h_values is not None:
            payload["value"] = str(det.evaluate(service.weight()))
        return payload

    invoke(ctx, action, **kwargs)


@cli.command()
@click.option("--force", "-f", is_flag=True, help="Overwrite existing configuration")
def init_config(force: bool) -> None:
    """Initialize a sample .env configuration file."""
    from .config import create_sample_env, get_default_config_path

    config_path = get_default_config_path()

    if config_path.exists() and not force:
        click.echo(f"Configuration file already exists: {config_path}")
        click.echo("Use --force to overwrite")
        return

    try:
        create_sample_env(config_path)
        click.echo(f"Configuration file created: {config_path}")
    except Exception as e:
        click.echo(f"Failed to create configuration: {e}", err=True)
        sys.exit(1)


def main() -> None:
    """Main entry point for qaffine."""
    cli()


if __name__ == "__main__":
    main()
