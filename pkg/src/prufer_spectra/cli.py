"""Command-line front end.

Exit codes: 0 ok, 2 parse error, 3 invariant violation, 4 file error,
5 incomplete spectrum, 6 tangency, 7 integration failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as pio
from .boundary import Dirichlet, Periodic
from .eigensolver import compactified_energy_path, find_eigenvalues, scan_flow
from .errors import (
    CompletenessError,
    ContractViolation,
    IntegrationError,
    ParseError,
    PruferError,
    TangencyError,
)
from .hamiltonian import DEFAULT_STEPS, ham_find_eigenvalues
from .indices import LagrangianPath, conley_zehnder_index, intersection_index
from .jacobi import BlockJacobiModel, assemble_dense
from .linalg import hermitian_eig

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_IO = 4
EXIT_COMPLETENESS = 5
EXIT_TANGENCY = 6
EXIT_INTEGRATION = 7


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParseError(message)


def _complex_arg(text):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re,im, got {text!r}") from exc
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im, got {text!r}")
    return complex(parts[0], parts[1])


def _add_bc(p, required=False):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--k", type=float, help="quasi-momentum of the periodic condition")
    g.add_argument("--dirichlet", action="store_true", help="Dirichlet condition")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, default=1, help="worker threads for energy scans")


def build_parser():
    parser = _Parser(prog="prufer-spectra", description="Matrix Prüfer phase spectra and indices.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("oracle", help="dense diagonalization of a Jacobi model")
    p.add_argument("model")
    p.add_argument("--omega", type=_complex_arg, default=None, help="corner factor re,im")

    p = sub.add_parser("flow", help="eigenphase flow as CSV (and SVG)")
    p.add_argument("model")
    _add_bc(p)
    p.add_argument("--grid", type=int, default=None, help="initial grid points")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--svg", default=None, help="optional SVG output path")
    _add_jobs(p)

    p = sub.add_parser("solve", help="eigenvalues with multiplicities of a Jacobi model")
    p.add_argument("model")
    _add_bc(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--grid", type=int, default=None)
    _add_jobs(p)

    p = sub.add_parser("index", help="intersection or Conley-Zehnder index of a path file")
    p.add_argument("path")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--psi", help="reference frame file")
    g.add_argument("--cz", action="store_true", help="Conley-Zehnder index at e^{ik}")
    p.add_argument("--k", type=float, default=None)

    p = sub.add_parser("ham-solve", help="eigenvalues of a continuous model in [emin, emax]")
    p.add_argument("model")
    _add_bc(p)
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--grid", type=int, default=256)

    p = sub.add_parser("path", help="write the compactified energy path of a Jacobi model")
    p.add_argument("model")
    p.add_argument("--out", required=True, help="path file to write")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--frame-out", default=None, help="also write the boundary frame")
    _add_bc(p)
    return parser


def _bc(args, default):
    if args.dirichlet:
        return Dirichlet()
    if args.k is not None:
        return Periodic(args.k)
    if default is None:
        raise ParseError("no boundary condition: pass --k or --dirichlet, or set one in the model")
    return default


def _jacobi(path):
    model, bc = pio.load_model(path)
    if not isinstance(model, BlockJacobiModel):
        raise ContractViolation(f"{path}: a jacobi model is required")
    return model, bc


def cmd_oracle(args, out):
    model, bc = _jacobi(args.model)
    if args.omega is not None:
        omega = args.omega
    elif isinstance(bc, Periodic):
        omega = np.exp(1j * bc.k)
    else:
        omega = 0.0
    if not (abs(omega) == 0 or abs(abs(omega) - 1) < 1e-12):
        raise ContractViolation("|omega| must be 0 or 1")
    ev, _ = hermitian_eig(assemble_dense(model, omega))
    out.write(pio.dumps({"eigenvalues": [float(e) for e in np.sort(ev)], "source": "dense"}))
    return EXIT_OK


def cmd_flow(args, out):
    model, bc = _jacobi(args.model)
    bc = _bc(args, bc)
    flow = scan_flow(model, bc, grid_points=args.grid, jobs=args.jobs)
    pio.write_text(args.out, pio.flow_to_csv(flow))
    if args.svg:
        from .plotting import save_flow_svg

        save_flow_svg(args.svg, flow, str(bc))
    return EXIT_OK


def cmd_solve(args, out):
    model, bc = _jacobi(args.model)
    bc = _bc(args, bc)
    res = find_eigenvalues(model, bc, tol=args.tol, grid_points=args.grid, jobs=args.jobs)
    bad = [v for v in res.diagnostics["verification"] if v["kernel"] != v["multiplicity"]]
    if bad:
        raise CompletenessError(f"multiplicity re-check failed at E={bad[0]['energy']:.12g}")
    out.write(pio.dumps(res.to_dict()))
    return EXIT_OK


def cmd_index(args, out):
    path = pio.load_path(args.path)
    if args.cz:
        if args.k is None:
            raise ParseError("--cz needs --k")
        if isinstance(path, LagrangianPath):
            raise ContractViolation("--cz needs a symplectic path")
        value = conley_zehnder_index(path, args.k)
    else:
        psi = pio.load_frame(args.psi)
        if not isinstance(path, LagrangianPath):
            path = path.graph_path()
        value = intersection_index(path, psi)
    out.write(f"{value}\n")
    return EXIT_OK


def cmd_ham_solve(args, out):
    model, bc = pio.load_model(args.model)
    system = pio.as_hamiltonian(model)
    bc = _bc(args, bc)
    res = ham_find_eigenvalues(
        system, bc, args.emin, args.emax, tol=args.tol, grid_points=args.grid, steps=args.steps
    )
    out.write(pio.dumps(res.to_dict()))
    return EXIT_OK


def cmd_path(args, out):
    model, bc = _jacobi(args.model)
    path = compactified_energy_path(model, args.samples)
    pio.save_json(args.out, pio.path_to_dict(path))
    if args.frame_out:
        bc = _bc(args, bc)
        pio.save_json(
            args.frame_out,
            {"format": pio.FORMAT_VERSION, "frame": pio.encode_complex(bc.frame(model.L))},
        )
    return EXIT_OK


COMMANDS = {
    "oracle": cmd_oracle,
    "flow": cmd_flow,
    "solve": cmd_solve,
    "index": cmd_index,
    "ham-solve": cmd_ham_solve,
    "path": cmd_path,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except ParseError as exc:
        code, msg = EXIT_PARSE, exc
    except CompletenessError as exc:
        code, msg = EXIT_COMPLETENESS, exc
    except TangencyError as exc:
        code, msg = EXIT_TANGENCY, exc
    except IntegrationError as exc:
        code, msg = EXIT_INTEGRATION, exc
    except (ContractViolation, PruferError) as exc:
        code, msg = EXIT_INVARIANT, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    print(f"prufer-spectra: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
