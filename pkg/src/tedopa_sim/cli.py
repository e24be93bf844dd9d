"""Command-line front end: ``tedopa-sim <subcommand> [config.toml] [options]``.

Every output file starts with a comment block holding the tool version and
the fully resolved configuration, so a run can be repeated from its output.
Errors are reported as one line ``error: <code>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys


from tedopa_sim import __version__
from tedopa_sim.config import (
    apply_values,
    effective_config_lines,
    parse_config,
    parse_override,
    validate,
)
from tedopa_sim.errors import ConfigError, InvalidInputError, NumericalError, UnsupportedSizeError

THREADS_ENV = "TEDOPA_SIM_THREADS"

EXIT_CODES = {
    "config": 2,
    "invalid-input": 3,
    "unsupported-size": 4,
    "numerical": 5,
    "io": 6,
}

# (label, d, l, n_steps, n_chains, n_system_qubits)
LARGE_MODEL_PRESET = (
    ("two-site-l49-N188", 8, 49, 188, 2, 2),
    ("two-site-l49-N188", 4, 49, 188, 2, 2),
    ("chromophore-l150-N1000", 32, 150, 1000, 3, 1),
    ("chromophore-l150-N1000", 16, 150, 1000, 3, 1),
)


def _number(x, full):
    return f"{x:.17g}" if full else f"{x:.6g}"


def _header(config, command, comment="#"):
    lines = [f"tedopa-sim {__version__} {command}", "effective config:"]
    lines += ["  " + s for s in effective_config_lines(config)]
    return [f"{comment} {s}" for s in lines]


def _emit(text, path):
    if path:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands

def cmd_chain_coeffs(config):
    from tedopa_sim.chain_mapping import chain_coefficients
    from tedopa_sim.spectral_density import missing_reorganization_ratio

    full = config.output.full_precision
    sd = config.spectral_density()
    coeffs = chain_coefficients(
        sd, max(config.chain.l, 1), pi_normalization=config.bath.measure_pi_normalization,
        panels=config.bath.panels, nodes_per_panel=config.bath.nodes_per_panel,
    )
    lines = _header(config, "chain-coeffs")
    lines.append(f"# t0_cm1 = {_number(coeffs.t0, full)}")
    lines.append(f"# missing_reorganization_ratio = {_number(missing_reorganization_ratio(sd), full)}")
    lines.append("n,w_n_cm1,t_np1_n_cm1")
    for n, w in enumerate(coeffs.w):
        t = _number(coeffs.t[n], full) if n < coeffs.t.size else ""
        lines.append(f"{n},{_number(w, full)},{t}")
    return "\n".join(lines) + "\n"


def _resource_rows(config, preset):
    from tedopa_sim.trotter import estimate_resources

    rows = []
    if preset == "large-models":
        for label, d, l, n_steps, n_chains, n_sys in LARGE_MODEL_PRESET:
            for enc in ("binary", "unary"):
                rows.append((f"{label}-d{d}", enc, estimate_resources(d, l, n_steps, enc, n_chains, n_sys)))
        return rows
    n_sites = len(config.system.site_energies)
    n_chains = config.resources.n_chains or n_sites
    n_sys = config.resources.n_system_qubits or n_sites
    c = config.chain
    est = estimate_resources(c.d, max(c.l, 1), config.evolution.n_steps, c.encoding, n_chains, n_sys)
    rows.append((f"config-d{c.d}", c.encoding, est))
    return rows


def cmd_resources(config, preset=None):
    lines = _header(config, "resources" + (f" --preset {preset}" if preset else ""))
    lines.append("# cnot_gates: leading-order count l*N*d^2 (unary) or l*N*d^2*log2(d) (binary) per chain")
    lines.append("# cnot_synthesized: CNOTs of the Pauli-term CNOT-ladder circuit, all-to-all connectivity")
    lines.append("label,encoding,qubits,cnot_gates,cnot_synthesized,pauli_terms_per_step")
    for label, enc, est in _resource_rows(config, preset):
        lines.append(
            f"{label},{enc},{est.qubits},{est.cnot_asymptotic},{est.cnot_count},{est.pauli_term_count}"
        )
    return "\n".join(lines) + "\n"


def _build_terms(config):
    from tedopa_sim.chain_mapping import chain_coefficients
    from tedopa_sim.hamiltonian import QubitLayout, assemble
    from tedopa_sim.pauli import BosonEncoding

    spec = config.system_spec()
    enc = BosonEncoding(config.chain.encoding, config.chain.d)
    layout = QubitLayout.linear(spec.n_sites, config.chain.l, enc)
    coeffs = None
    if config.chain.l > 0:
        coeffs = chain_coefficients(
            config.spectral_density(), config.chain.l,
            pi_normalization=config.bath.measure_pi_normalization,
            panels=config.bath.panels, nodes_per_panel=config.bath.nodes_per_panel,
        )
    return assemble(spec, coeffs, layout), layout


def _write_terms_json(config, terms):
    if config.output.json_path:
        _emit(terms.to_json() + "\n", config.output.json_path)


def cmd_simulate(config):
    from tedopa_sim.simulator import run_dynamics

    full = config.output.full_precision
    result = run_dynamics(config)
    n_sites = result.p_site.shape[1]
    cols = ["step", "time_ps"] + [f"P{m}" for m in range(n_sites)] + ["sector_mass"]
    if result.epsilon is not None:
        cols.append("epsilon")
    lines = _header(config, "simulate")
    for key in sorted(result.metadata):
        value = result.metadata[key]
        value = _number(value, full) if isinstance(value, float) else value
        lines.append(f"# {key} = {value}")
    lines.append(",".join(cols))
    rows = []
    for k, t in enumerate(result.times):
        vals = [str(k), _number(t, full)] + [_number(p, full) for p in result.p_site[k]]
        vals.append(_number(result.sector_mass[k], full))
        if result.epsilon is not None:
            vals.append(_number(result.epsilon[k], full))
        rows.append(vals)
    csv = "\n".join(lines + [",".join(r) for r in rows]) + "\n"
    if config.output.dat_path:
        dat = lines[:-1] + ["# " + " ".join(cols)] + [" ".join(r) for r in rows]
        _emit("\n".join(dat) + "\n", config.output.dat_path)
    return csv


def cmd_export_qasm(config):
    from tedopa_sim.trotter import build_trotter_circuit

    terms, _ = _build_terms(config)
    _write_terms_json(config, terms)
    circuit = build_trotter_circuit(terms, config.evolution.dt_ps, config.evolution.n_steps)
    head = _header(config, "export-qasm", comment="//")
    head.append(f"// cnot_count = {circuit.cnot_count}")
    return "\n".join(head) + "\n" + circuit.to_qasm(full_precision=config.output.full_precision)


def cmd_commutator(config):
    from tedopa_sim.trotter import commutator_norm, trotter_error_bound

    full = config.output.full_precision
    terms, _ = _build_terms(config)
    _write_terms_json(config, terms)
    alpha = commutator_norm(terms)
    total = config.evolution.dt_ps * config.evolution.n_steps
    bound = trotter_error_bound(alpha, total, config.evolution.n_steps)
    lines = _header(config, "commutator")
    lines.append(f"# groups = {terms.n_groups + 1}")
    lines.append("alpha_comm_cm2,total_time_ps,n_steps,error_bound")
    lines.append(f"{_number(alpha, full)},{_number(total, full)},{config.evolution.n_steps},{_number(bound, full)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- plumbing

def build_parser():
    parser = argparse.ArgumentParser(prog="tedopa-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tedopa-sim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("chain-coeffs", "chain coefficients of the configured bath (CSV)"),
        ("resources", "qubit and CNOT counts (CSV)"),
        ("simulate", "Trotter dynamics of the site populations (CSV)"),
        ("export-qasm", "Trotter circuit as OpenQASM 2.0"),
        ("commutator", "commutator norm and Trotter error bound (CSV)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?", help="TOML config file (defaults if omitted)")
        p.add_argument("-o", "--output", help="output file (stdout if omitted)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a config key; repeatable")
        p.add_argument("--full-precision", action="store_true", help="17 significant digits")
        if name == "simulate":
            p.add_argument("--oracle", action="store_true", help="compare with the exact propagator")
            p.add_argument("--dat", help="also write a whitespace-separated .dat file")
        if name == "resources":
            p.add_argument("--preset", choices=["large-models"],
                           help="built-in model sizes instead of the config")
        if name in ("export-qasm", "commutator"):
            p.add_argument("--terms-json", help="also write the grouped Hamiltonian as JSON")
    return parser


def resolve_config(args):
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read {args.config}: {exc.strerror}") from None
        config = parse_config(text)
    else:
        config = parse_config("")
    for assignment in args.set:
        apply_values(config, parse_override(assignment))
    if args.full_precision:
        config.output.full_precision = True
    if getattr(args, "oracle", False):
        config.oracle.enabled = True
    if getattr(args, "dat", None):
        config.output.dat_path = args.dat
    if getattr(args, "terms_json", None):
        config.output.json_path = args.terms_json
    return validate(config)


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return contextlib.nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _classify(exc):
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, UnsupportedSizeError):
        return "unsupported-size"
    if isinstance(exc, InvalidInputError):
        return "invalid-input"
    if isinstance(exc, NumericalError):
        return "numerical"
    return "io"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        with _thread_limit():
            if args.command == "chain-coeffs":
                text = cmd_chain_coeffs(config)
            elif args.command == "resources":
                text = cmd_resources(config, args.preset)
            elif args.command == "simulate":
                text = cmd_simulate(config)
            elif args.command == "export-qasm":
                text = cmd_export_qasm(config)
            else:
                text = cmd_commutator(config)
        _emit(text, args.output or config.output.path)
    except (InvalidInputError, NumericalError, OSError) as exc:
        code = _classify(exc)
        message = " ".join(str(exc).split())
        print(f"error: {code}: {message}", file=sys.stderr)
        return EXIT_CODES[code]
    return 0


if __name__ == "__main__":
    sys.exit(main())
