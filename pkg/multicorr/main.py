"""Command-line interface for multicorr."""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import argparse
import functools
import json
import logging
import sys
from pathlib import Path

from multicorr import __version__
from multicorr.config import Config
from multicorr.covariance import covariance, pauli_covariance_scan
from multicorr.cuts import (
    Bipartition,
    degree_of_correlations,
    factorize,
    is_product_across_cut,
    marginal_summary,
)
from multicorr.descriptions import (
    load_document,
    parse_scenario_source,
    parse_state_source,
    protocol_from_document,
    state_checksum,
)
from multicorr.distillation import (
    closed_forms,
    distill,
    epsilon_of_fidelity,
    q_of_fidelity,
    success_lower_bound,
)
from multicorr.helper.naming import round_floats
from multicorr.helper.report import (
    FIGURES,
    figure_table,
    result_table,
    result_text,
)
from multicorr.output_manager import Output_Manager
from multicorr.pipeline_step import (
    Domain_Exception,
    Pipeline_Exception,
    Size_Limit_Exception,
)
from multicorr.postulates import (
    INDICATORS,
    Scenario,
    check_measure_monotonicity,
    get_indicator,
    run_postulate_scenario,
)
from multicorr.qstate import SingleQubitBasis, partial_trace, tensor_product
from multicorr.work import (
    FAMILIES,
    Basis_Search,
    Communication_Constraint,
    best_family_work,
    delta_w_estimate,
    optimize_basis,
    run_protocol,
)

lgr = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_SIZE_LIMIT = 3

REPORT_SCHEMA = "multicorr.report/1"


class _Argument_Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_parties(text):
    """Parse a comma-separated list of party indices such as ``0,2``."""
    try:
        return sorted({int(p) for p in text.split(",") if p.strip()})
    except ValueError:
        raise Pipeline_Exception(f"Invalid party list '{text}'.") from None


def _load_state(options, default=None):
    """The tensor product of all ``--state`` sources, in order."""
    sources = options.state or ([default] if default else [])
    if not sources:
        raise Pipeline_Exception("No state given; use --state.")
    states = [parse_state_source(source, options.n) for source in sources]
    state = functools.reduce(tensor_product, states)
    state.label = " x ".join(s.label or source for s, source in zip(states, sources))
    return state


def _search(config):
    return Basis_Search.from_config(config)


def _constraint(options, num_parties):
    if not getattr(options, "cut", None):
        return Communication_Constraint.unrestricted()
    cut = Bipartition(num_parties, frozenset(_parse_parties(options.cut)))
    return Communication_Constraint.across(cut)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _cmd_analyze(options, config):
    s = _load_state(options)
    tol = config.product_tol if options.tol is None else options.tol
    n = s.num_parties
    if n > config.max_analysis_parties:
        raise Size_Limit_Exception(
            f"Cut analysis refused for {n} parties "
            f"(limit {config.max_analysis_parties})."
        )
    if n == 1:
        return s, {
            "num_parties": 1,
            "cuts": [],
            "genuine": False,
            "degree": 1,
            "marginals": [],
        }

    cuts = [
        {"cut": str(cut), "product": bool(is_product_across_cut(s, cut, tol))}
        for cut in Bipartition.all_cuts(n)
    ]
    factorization = factorize(s, tol)
    result = {
        "num_parties": n,
        "cuts": cuts,
        "genuine": not any(c["product"] for c in cuts),
        "degree": degree_of_correlations(s, tol),
        "factorization": [list(f) for f in factorization.partition()],
        "factor_sizes": factorization.sizes,
        "marginals": marginal_summary(s, tol),
    }
    lgr.info(
        "%s: degree %d, genuine %s", s.label, result["degree"], result["genuine"]
    )
    return s, result


def _cmd_figure(options, config):
    default = config.fig2_parties if options.which == "fig2" else config.fig3_parties
    parties = options.n or default
    points = options.points or config.figure_points
    table = figure_table(options.which, parties, points)
    result = {"figure": options.which, "rows": table.to_dict("records")}
    return None, result


def _cmd_postulates(options, config):
    s = _load_state(options)
    scenario = parse_scenario_source(options.scenario)
    if (
        options.seed is not None
        and scenario.kind in ("local_unitary", "observation4")
        and "seed" not in scenario.params
    ):
        scenario = Scenario(scenario.kind, {**scenario.params, "seed": options.seed})
    tol = config.violation_tol if options.tol is None else options.tol

    report = run_postulate_scenario(options.indicator, scenario, s, config, tol)
    result = report.as_dict()

    instruments = scenario.instruments(s.num_parties)
    if instruments is not None:
        indicator = get_indicator(options.indicator)
        check = check_measure_monotonicity(
            lambda state: indicator(state, config=config), s, instruments, tol
        )
        result["average_monotonicity"] = {
            "before": check.lhs,
            "branch_average": check.rhs,
            "holds": check.holds,
            "branches": len(check.branches),
        }
    return s, result


def _cmd_distill(options, config):
    if options.fidelity is not None:
        if options.n is None:
            raise Pipeline_Exception("A target fidelity needs --n.")
        n, fidelity = options.n, options.fidelity
        result = {
            "n": n,
            "fidelity": fidelity,
            "epsilon": epsilon_of_fidelity(n, fidelity),
            "success_probability": q_of_fidelity(n, fidelity),
            "success_lower_bound": success_lower_bound(0.5, fidelity),
        }
        return None, result

    if options.epsilon is None:
        raise Pipeline_Exception("distill needs --epsilon or --fidelity.")
    s = _load_state(options, default="w_mixture")
    outcome = distill(s, options.epsilon)
    result = {
        "epsilon": options.epsilon,
        "success_probability": outcome.success_probability,
        "fidelity": outcome.fidelity,
    }
    if not options.state and s.num_parties >= 3:
        q, fidelity = closed_forms(s.num_parties, options.epsilon)
        result["closed_form"] = {"success_probability": q, "fidelity": fidelity}
    return s, result


def _cmd_covariance(options, config):
    s = _load_state(options)
    if options.pauli:
        return s, {"pauli": options.pauli, "covariance": covariance(s, options.pauli)}

    mode = "sampled" if options.sample else "full"
    scan = pauli_covariance_scan(
        s,
        mode,
        count=options.sample or config.sample_count,
        seed=options.seed,
        budget=config.scan_budget,
    )
    tol = config.covariance_zero_tol if options.tol is None else options.tol
    result = {
        "mode": mode,
        "strings": len(scan.values),
        "max_abs": scan.max_abs,
        "argmax": scan.argmax,
        "vanishes": scan.vanishes(tol),
        "tol": tol,
    }
    lgr.info("max |Cov| = %.3g at %s", scan.max_abs, scan.argmax)
    return s, result


def _family_work(s, family, options, config):
    """Work of a built-in family on the unrestricted state."""
    n = s.num_parties
    if family.name == "collect":
        return run_protocol(s, family.protocol(n), config=config).as_dict()
    if n == 1 or (options.party is None and options.theta is None):
        work, info = family.best(s, _search(config))
        return {**info, "work_bits": work}

    party = options.party or 0
    if options.theta is None:
        optimum = optimize_basis(s, party, family, _search(config))
        return {"family": family.name, **optimum.as_dict()}
    basis = SingleQubitBasis.angles(options.theta, options.phi or 0.0)
    result = run_protocol(s, family.protocol(n, party, basis), config=config)
    return {
        "family": family.name,
        "measuring_party": party,
        "theta": options.theta,
        "phi": options.phi or 0.0,
        **result.as_dict(),
    }


def _cmd_work(options, config):
    s = _load_state(options)
    n = s.num_parties
    constraint = _constraint(options, n)
    source = options.protocol

    if Path(source).is_file():
        protocol, document_constraint = protocol_from_document(
            load_document(source), n
        )
        if constraint.is_unrestricted:
            constraint = document_constraint
        return s, run_protocol(s, protocol, constraint, config).as_dict()

    if source not in FAMILIES:
        raise Pipeline_Exception(
            f"Unknown protocol '{source}'. Use a protocol document or one of "
            f"{', '.join(FAMILIES)}."
        )
    family = FAMILIES[source]()
    if constraint.is_unrestricted:
        return s, _family_work(s, family, options, config)

    sides = [
        {
            "parties": side,
            "work_bits": best_family_work(
                partial_trace(s, side), [family], _search(config)
            ),
        }
        for side in constraint.sides(n)
    ]
    return s, {
        "family": family.name,
        "constraint": str(constraint),
        "sides": sides,
        "work_bits": sum(side["work_bits"] for side in sides),
    }


def _cmd_delta_w(options, config):
    s = _load_state(options)
    estimate = delta_w_estimate(s, options.family, _search(config))
    lgr.info("delta W = %.6g (best cut %s)", estimate.delta_w, estimate.best_cut)
    return s, estimate.as_dict()


COMMANDS = {
    "analyze": (_cmd_analyze, "Cut analysis: product tests, degree, factorization"),
    "figure": (_cmd_figure, "Curve data of the distillation and covariance plots"),
    "postulates": (_cmd_postulates, "Run a postulate scenario on an indicator"),
    "distill": (_cmd_distill, "Local filtering toward the W state"),
    "covariance": (_cmd_covariance, "Covariance of Pauli strings"),
    "work": (_cmd_work, "Work extraction with a protocol or protocol family"),
    "delta-w": (_cmd_delta_w, "Work gap between global and cut-restricted extraction"),
}


# --------------------------------------------------------------------------
# parser and output
# --------------------------------------------------------------------------


def _build_parser():
    common = _Argument_Parser(add_help=False)
    common.add_argument("-c", "--config", help="Path to the configuration file")
    common.add_argument(
        "--format",
        choices=["csv", "json", "text"],
        help="Output format (json by default, csv for figure)",
    )
    common.add_argument(
        "--out",
        help="Output file, or an existing directory for <command>_result.<ext>. "
        "Without it the result is written to stdout.",
    )
    common.add_argument("--tol", type=float, help="Override the command tolerance")
    common.add_argument("--seed", type=int, help="Seed for sampled or random parts")

    with_state = _Argument_Parser(add_help=False)
    with_state.add_argument(
        "--state",
        action="append",
        help="State as name[:key=value,...] or a JSON document; repeat for a "
        "tensor product",
    )
    with_state.add_argument("--n", type=int, help="Party count for named states")

    parser = _Argument_Parser(
        prog="multicorr",
        description="Genuine multipartite correlations of qubit systems.",
    )
    parser.add_argument(
        "-v", "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    def add(name, parents):
        return commands.add_parser(
            name, parents=parents, help=COMMANDS[name][1], description=COMMANDS[name][1]
        )

    add("analyze", [common, with_state])

    figure = add("figure", [common])
    figure.add_argument("which", choices=FIGURES)
    figure.add_argument("--n", type=int, nargs="+", help="Party counts of the curves")
    figure.add_argument("--points", type=int, help="Points along the fidelity axis")

    postulates = add("postulates", [common, with_state])
    postulates.add_argument(
        "--scenario",
        required=True,
        help="Scenario as kind[:key=value,...] or a JSON document",
    )
    postulates.add_argument(
        "--indicator", default="covariance", choices=sorted(INDICATORS)
    )

    distill_parser = add("distill", [common, with_state])
    distill_parser.add_argument("--epsilon", type=float, help="Filter strength")
    distill_parser.add_argument(
        "--fidelity", type=float, help="Target fidelity in (1/2, 1) (needs --n)"
    )

    covariance_parser = add("covariance", [common, with_state])
    covariance_parser.add_argument("--pauli", help="A single Pauli string, e.g. ZZZ")
    covariance_parser.add_argument(
        "--sample", type=int, help="Scan this many random strings instead of all"
    )

    work = add("work", [common, with_state])
    work.add_argument(
        "--protocol",
        default="measure_broadcast",
        help="Protocol document or family name (collect, measure_broadcast)",
    )
    work.add_argument("--party", type=int, help="Measuring party")
    work.add_argument("--theta", type=float, help="Polar angle of the basis")
    work.add_argument("--phi", type=float, help="Phase of the basis")
    work.add_argument("--cut", help="Parties on one side of the cut, e.g. 0,1")

    delta_w = add("delta-w", [common, with_state])
    delta_w.add_argument(
        "--family",
        action="append",
        choices=sorted(FAMILIES),
        help="Protocol family to optimize over (repeatable, default all)",
    )
    return parser


def _state_summary(options, state):
    if state is None:
        return None
    return {
        "id": " x ".join(options.state) if options.state else state.label,
        "num_parties": state.num_parties,
        "checksum": state_checksum(state),
    }


def _arguments(options):
    skip = ("config", "out", "format")
    return {k: v for k, v in sorted(vars(options).items()) if k not in skip}


def _emit(options, config, state, result):
    command = options.command
    digits = int(config.significant_digits)
    output_format = options.format or ("csv" if command == "figure" else "json")

    out = Path(options.out) if options.out else None
    if out is not None and out.is_dir():
        suffix = "txt" if output_format == "text" else output_format
        out = out / f"{command}_result.{suffix}"
    manager = Output_Manager(config, command, COMMANDS[command][1])

    if output_format == "csv":
        table = result_table(round_floats(result, digits))
        if out is None:
            table.to_csv(sys.stdout, index=False, float_format=f"%.{digits}g")
        else:
            manager.save_dataframe(table, str(out), format="csv")
        return

    if output_format == "text":
        text = result_text(round_floats(result, digits))
        if out is None:
            sys.stdout.write(text)
        else:
            manager.save_text(text, str(out))
        return

    report = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "arguments": _arguments(options),
        "state": _state_summary(options, state),
        "result": result,
        "version": config.get_version(),
    }
    if out is None:
        sys.stdout.write(json.dumps(round_floats(report, digits), indent=4) + "\n")
    else:
        manager.save_json(report, str(out))


def main(argv=None):
    """Run a multicorr command from the command line."""
    parser = _build_parser()
    options = parser.parse_args(argv)

    try:
        config = Config(options.config, verbose=True)
        handler, _ = COMMANDS[options.command]
        state, result = handler(options, config)
        _emit(options, config, state, result)
    except Size_Limit_Exception as e:
        lgr.error("%s", e)
        return EXIT_SIZE_LIMIT
    except Domain_Exception as e:
        lgr.error("%s", e)
        return EXIT_DOMAIN
    except (Pipeline_Exception, FileNotFoundError) as e:
        lgr.error("%s", e)
        return EXIT_USAGE
    return EXIT_OK
