"""JSON model, path and result files; CSV eigenphase flows.

Complex numbers are stored as ``[re, im]`` pairs, angles in radians. See
FORMATS.md for the layouts.
"""

from __future__ import annotations

import json

import numpy as np

from .boundary import Dirichlet, General, Periodic
from .errors import ContractViolation, ParseError
from .hamiltonian import HamiltonianSystem, SturmLiouvilleModel, sturm_liouville_to_hamiltonian
from .indices import LagrangianPath, SymplecticPath
from .jacobi import BlockJacobiModel

FORMAT_VERSION = 1


def encode_complex(a):
    """Nested lists with every entry replaced by ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj, name="array"):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: expected nested [re, im] pairs") from exc
    if a.ndim < 1 or a.shape[-1] != 2:
        raise ParseError(f"{name}: innermost entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _load(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    version = data.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format version {version!r}")
    return data


def _field(data, key, where):
    if key not in data:
        raise ParseError(f"{where}: missing field {key!r}")
    return data[key]


def parse_boundary(spec, where="boundary"):
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise ParseError(f"{where}: must be an object")
    kind = spec.get("type")
    if kind == "dirichlet":
        return Dirichlet()
    if kind == "periodic":
        try:
            return Periodic(float(_field(spec, "k", where)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{where}: k must be a real number") from exc
    if kind == "general":
        return General(decode_complex(_field(spec, "frame", where), f"{where}.frame"))
    raise ParseError(f"{where}: unknown type {kind!r}")


def encode_boundary(bc):
    if isinstance(bc, Dirichlet):
        return {"type": "dirichlet"}
    if isinstance(bc, Periodic):
        return {"type": "periodic", "k": bc.k}
    if isinstance(bc, General):
        return {"type": "general", "frame": encode_complex(bc.matrix)}
    raise ContractViolation(f"unknown boundary condition {bc!r}")


def model_from_dict(data, where="model"):
    """Model object and its boundary condition (or None) from parsed JSON."""
    kind = _field(data, "kind", where)
    bc = parse_boundary(data.get("boundary"), f"{where}.boundary")
    if kind == "jacobi":
        V = decode_complex(_field(data, "V", where), f"{where}.V")
        T = decode_complex(_field(data, "T", where), f"{where}.T")
        if V.ndim != 3 or T.ndim != 3:
            raise ParseError(f"{where}: V and T must be lists of L x L matrices")
        for key in ("N", "L"):
            if key in data and int(data[key]) != V.shape[{"N": 0, "L": 1}[key]]:
                raise ContractViolation(f"{where}: {key}={data[key]} does not match the blocks")
        return BlockJacobiModel(V, T), bc
    if kind == "hamiltonian":
        nodes = _field(data, "nodes", where)
        V = decode_complex(_field(data, "V", where), f"{where}.V")
        P = decode_complex(_field(data, "P", where), f"{where}.P")
        start = data.get("dirichlet_start")
        start = None if start is None else decode_complex(start, f"{where}.dirichlet_start")
        system = HamiltonianSystem.from_nodes(nodes, V, P, start)
        system.generators(16)
        return system, bc
    if kind == "sturm-liouville":
        nodes = _field(data, "nodes", where)
        p = decode_complex(_field(data, "p", where), f"{where}.p")
        q = decode_complex(_field(data, "q", where), f"{where}.q")
        v = decode_complex(_field(data, "v", where), f"{where}.v")
        return SturmLiouvilleModel.from_nodes(nodes, p, q, v), bc
    raise ParseError(f"{where}: unknown kind {kind!r}")


def load_model(path):
    """Read a model file; returns ``(model, boundary or None)``."""
    return model_from_dict(_load(path), str(path))


def as_hamiltonian(model):
    if isinstance(model, SturmLiouvilleModel):
        return sturm_liouville_to_hamiltonian(model)
    if isinstance(model, HamiltonianSystem):
        return model
    raise ContractViolation("a continuous (hamiltonian or sturm-liouville) model is required")


def jacobi_to_dict(model, bc=None):
    out = {
        "format": FORMAT_VERSION,
        "kind": "jacobi",
        "N": model.N,
        "L": model.L,
        "V": encode_complex(model.V),
        "T": encode_complex(model.T),
    }
    if bc is not None:
        out["boundary"] = encode_boundary(bc)
    return out


def path_to_dict(path):
    if isinstance(path, LagrangianPath):
        return {
            "format": FORMAT_VERSION,
            "kind": "lagrangian-path",
            "closed": bool(path.closed),
            "params": path.params.tolist(),
            "frames": encode_complex(path.frames),
        }
    if isinstance(path, SymplecticPath):
        return {
            "format": FORMAT_VERSION,
            "kind": "symplectic-path",
            "closed": bool(path.closed),
            "params": path.params.tolist(),
            "matrices": encode_complex(path.matrices),
        }
    raise ContractViolation(f"cannot serialize {type(path).__name__}")


def path_from_dict(data, where="path"):
    kind = _field(data, "kind", where)
    params = _field(data, "params", where)
    closed = bool(data.get("closed", False))
    if kind == "lagrangian-path":
        frames = decode_complex(_field(data, "frames", where), f"{where}.frames")
        return LagrangianPath(params, frames, closed)
    if kind == "symplectic-path":
        mats = decode_complex(_field(data, "matrices", where), f"{where}.matrices")
        return SymplecticPath(params, mats, closed)
    raise ParseError(f"{where}: unknown kind {kind!r}")


def load_path(path):
    return path_from_dict(_load(path), str(path))


def load_frame(path):
    """A single frame file: ``{"frame": [[[re, im], ...], ...]}``."""
    data = _load(path)
    return decode_complex(_field(data, "frame", str(path)), f"{path}.frame")


def dumps(obj):
    """Deterministic JSON text: one sorted top-level key per line."""
    if not isinstance(obj, dict):
        return json.dumps(obj) + "\n"
    body = ",\n".join(f"  {json.dumps(k)}: {json.dumps(obj[k])}" for k in sorted(obj))
    return "{\n" + body + "\n}\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def save_json(path, obj):
    write_text(path, dumps(obj))


def flow_to_csv(flow):
    """FlowCSV text: header ``E,theta_1,...,theta_m``, 17 significant digits."""
    m = flow.branches
    lines = [",".join(["E"] + [f"theta_{j + 1}" for j in range(m)])]
    for E, row in zip(flow.energies, flow.phases):
        lines.append(",".join(f"{v:.17g}" for v in (E, *row)))
    return "\n".join(lines) + "\n"


def read_flow_csv(path):
    """Energies and phases from a FlowCSV file."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if not header or header[0] != "E":
            raise ParseError(f"{path}: header must start with 'E'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ParseError(f"{path}: column count differs from header")
    return data[:, 0], data[:, 1:]
