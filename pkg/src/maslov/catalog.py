"""Built-in shape catalog and the text grammar for shapes and loops.

Catalog entries (the CLI spells parameters as ``name:key=value,...``):

    line                      flat closed geodesic in a square torus, n = 1
    circle:r=R                round circle of radius R > 0 in C^1
    plane:n=N                 the standard real N-plane in C^N (default 2)
    su-plane:seed=S           special-unitary rotation of the plane in C^2,
                              as a flat torus quotient (minimal, angle 1)
    product-torus:r1=..,r2=.. product of circles, one per complex line
    gradient-graph:phi=EXPR   graph of the gradient of a potential phi(u1..uk)

Inline expression shapes use ``expr:<e1>;...;<e2n>[@lo:hi[:p],...]`` with
one expression per ambient coordinate in the variables u1..un; a trailing
``p`` marks a periodic axis. Expression-defined shapes get their jets by
finite differences and therefore run on the looser validation tier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientSpace, realify
from .errors import ConfigError, ParseError
from .expressions import Expression, Name, differentiate, parse_expression
from .immersion import (
    DomainBox,
    LoopPath,
    ParametricImmersion,
    full_loop,
    generator_loop,
)

__all__ = [
    "ShapeSpec",
    "parse_shape_spec",
    "build_shape",
    "build_loop",
    "catalog_entries",
    "line",
    "circle",
    "plane",
    "su_plane",
    "product_torus",
    "gradient_graph",
    "expression_immersion",
    "expression_twin",
    "su_matrix",
]

TWO_PI = 2.0 * np.pi


def _fmt(x: float) -> str:
    return f"{x:g}"


def line() -> ParametricImmersion:
    """Straight closed geodesic (u, 0) in the square torus C^1 / Z^2."""
    ambient = AmbientSpace(1, periods=np.eye(2))
    domain = DomainBox([0.0], [1.0], (True,))
    return ParametricImmersion.analytic(
        "line", ambient, domain,
        point=lambda u: np.array([u[0], 0.0]),
        first=lambda u: np.array([[1.0, 0.0]]),
        second=lambda u: np.zeros((1, 1, 2)),
    )


def circle(r: float) -> ParametricImmersion:
    """Round circle of radius r in C^1, parameter u1 in [0, 2pi)."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    ambient = AmbientSpace(1)
    domain = DomainBox([0.0], [TWO_PI], (True,))
    return ParametricImmersion.analytic(
        f"circle:r={_fmt(r)}", ambient, domain,
        point=lambda u: np.array([r * np.cos(u[0]), r * np.sin(u[0])]),
        first=lambda u: np.array([[-r * np.sin(u[0]), r * np.cos(u[0])]]),
        second=lambda u: np.array([[[-r * np.cos(u[0]), -r * np.sin(u[0])]]]),
    )


def _linear_immersion(name: str, matrix: np.ndarray, domain: DomainBox,
                      ambient: AmbientSpace) -> ParametricImmersion:
    n = matrix.shape[0]
    rows = realify(matrix.T)  # row a = real form of column a of the matrix

    def point(u):
        return rows.T @ u

    return ParametricImmersion.analytic(
        name, ambient, domain,
        point=point,
        first=lambda u: rows.copy(),
        second=lambda u: np.zeros((n, n, 2 * n)),
    )


def plane(matrix: np.ndarray | None = None, n: int = 2) -> ParametricImmersion:
    """Linear Lagrangian plane A . R^n for a unitary matrix A (default identity)."""
    if matrix is None:
        matrix = np.eye(n, dtype=complex)
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("plane matrix must be square")
    unitary_defect = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(n))))
    if unitary_defect > 1e-9:
        raise ValueError(f"plane matrix is not unitary (defect {unitary_defect:.3e})")
    domain = DomainBox(-np.ones(n), np.ones(n), (False,) * n)
    return _linear_immersion(f"plane:n={n}", matrix, domain, AmbientSpace(n))


def su_matrix(seed: int, n: int = 2) -> np.ndarray:
    """Deterministic special-unitary matrix from a seed."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q @ np.diag(np.diag(r) / np.abs(np.diag(r)))
    det = np.linalg.det(q)
    q[:, 0] *= np.conj(det) / abs(det)
    return q


def su_plane(seed: int, n: int = 2) -> ParametricImmersion:
    """Special-unitary rotation of the standard plane, as a flat sub-torus.

    Minimal (zero second derivatives), with constant Lagrangian angle 1.
    The ambient is the torus quotient by the lattice spanned by the image
    of the unit cell and its J-rotation.
    """
    a = su_matrix(seed, n)
    periods = np.vstack([realify(a.T), realify((1j * a).T)])
    ambient = AmbientSpace(n, periods=periods)
    domain = DomainBox(np.zeros(n), np.ones(n), (True,) * n)
    return _linear_immersion(f"su-plane:seed={seed}", a, domain, ambient)


def product_torus(radii) -> ParametricImmersion:
    """Product of circles, the k-th of radius radii[k] in its own complex line."""
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise ValueError(f"radii must be positive, got {radii}")
    n = len(radii)
    rvec = np.asarray(radii)
    ambient = AmbientSpace(n)
    domain = DomainBox(np.zeros(n), TWO_PI * np.ones(n), (True,) * n)

    def point(u):
        return np.concatenate([rvec * np.cos(u), rvec * np.sin(u)])

    def first(u):
        rows = np.zeros((n, 2 * n))
        for a in range(n):
            rows[a, a] = -rvec[a] * np.sin(u[a])
            rows[a, n + a] = rvec[a] * np.cos(u[a])
        return rows

    def second(u):
        arr = np.zeros((n, n, 2 * n))
        for a in range(n):
            arr[a, a, a] = -rvec[a] * np.cos(u[a])
            arr[a, a, n + a] = -rvec[a] * np.sin(u[a])
        return arr

    name = "product-torus:" + ",".join(f"r{k + 1}={_fmt(r)}" for k, r in enumerate(radii))
    return ParametricImmersion.analytic(name, ambient, domain, point, first, second)


def _expression_point_fn(exprs: list[Expression], params: dict):
    def point(u):
        env = dict(params)
        for k, value in enumerate(u):
            env[f"u{k + 1}"] = float(value)
        return np.array([e.evaluate(env) for e in exprs])

    return point


def expression_immersion(name: str, sources, domain: DomainBox,
                         params: dict | None = None) -> ParametricImmersion:
    """Immersion from one coordinate expression per ambient coordinate."""
    params = dict(params or {})
    n = domain.n
    exprs = [src if isinstance(src, Expression) else parse_expression(src, params)
             for src in sources]
    if len(exprs) != 2 * n:
        raise ValueError(
            f"need {2 * n} coordinate expressions for an n={n} domain, got {len(exprs)}"
        )
    return ParametricImmersion.from_point_function(
        name, AmbientSpace(n), domain, _expression_point_fn(exprs, params)
    )


def gradient_graph(phi_source: str, params: dict | None = None,
                   bound: float = 1.0) -> ParametricImmersion:
    """Graph {(u, grad phi(u))} of the gradient of a potential expression.

    Such graphs are automatically Lagrangian. The gradient is taken
    symbolically, so only the jets of the resulting coordinate map are
    approximated numerically.
    """
    params = dict(params or {})
    phi = parse_expression(phi_source, params)
    variables = sorted(v for v in phi.variables() if v.startswith("u"))
    if not variables:
        raise ValueError("potential must mention at least one of u1..u9")
    n = max(int(v[1:]) for v in variables)
    coords = [Expression(Name(f"u{k + 1}")) for k in range(n)]
    coords += [differentiate(phi, f"u{k + 1}") for k in range(n)]
    domain = DomainBox(-bound * np.ones(n), bound * np.ones(n), (False,) * n)
    return expression_immersion(f"gradient-graph:phi={phi_source}", coords, domain, params)


def expression_twin(imm_name: str, **params) -> ParametricImmersion:
    """Re-ingest a catalog entry as coordinate expressions with FD jets.

    Used to exercise the finite-difference tier on shapes whose exact
    geometry is known analytically.
    """
    if imm_name == "line":
        domain = DomainBox([0.0], [1.0], (True,))
        return expression_immersion("line[expr]", ["u1", "0"], domain)
    if imm_name == "circle":
        r = float(params.get("r", 1.0))
        domain = DomainBox([0.0], [TWO_PI], (True,))
        return expression_immersion(
            f"circle[expr]:r={_fmt(r)}", ["r * cos(u1)", "r * sin(u1)"],
            domain, params={"r": r},
        )
    if imm_name == "plane":
        n = int(params.get("n", 2))
        matrix = np.eye(n, dtype=complex)
        return _linear_expression_twin(f"plane[expr]:n={n}", matrix,
                                       DomainBox(-np.ones(n), np.ones(n), (False,) * n))
    if imm_name == "su-plane":
        seed = int(params.get("seed", 42))
        n = int(params.get("n", 2))
        matrix = su_matrix(seed, n)
        return _linear_expression_twin(
            f"su-plane[expr]:seed={seed}", matrix,
            DomainBox(np.zeros(n), np.ones(n), (True,) * n),
        )
    if imm_name == "product-torus":
        radii = [float(params[k]) for k in sorted(params) if k.startswith("r")]
        n = len(radii)
        env = {f"r{k + 1}": r for k, r in enumerate(radii)}
        sources = [f"r{k + 1} * cos(u{k + 1})" for k in range(n)]
        sources += [f"r{k + 1} * sin(u{k + 1})" for k in range(n)]
        domain = DomainBox(np.zeros(n), TWO_PI * np.ones(n), (True,) * n)
        name = "product-torus[expr]:" + ",".join(f"r{k + 1}={_fmt(r)}"
                                                 for k, r in enumerate(radii))
        return expression_immersion(name, sources, domain, params=env)
    raise ValueError(f"no expression twin for catalog entry {imm_name!r}")


def _linear_expression_twin(name: str, matrix: np.ndarray,
                            domain: DomainBox) -> ParametricImmersion:
    n = matrix.shape[0]
    env = {}
    sources = []
    for block, part in (("x", matrix.real), ("y", matrix.imag)):
        for i in range(n):
            terms = []
            for k in range(n):
                pname = f"a_{block}{i + 1}{k + 1}"
                env[pname] = float(part[i, k])
                terms.append(f"{pname} * u{k + 1}")
            sources.append(" + ".join(terms))
    return expression_immersion(name, sources, domain, params=env)


# ---------------------------------------------------------------------------
# Text specs


@dataclass(frozen=True)
class ShapeSpec:
    """Parsed form of a --shape argument."""

    kind: str                      # "catalog" or "inline"
    name: str = ""
    params: dict = field(default_factory=dict)
    sources: tuple = ()
    domain: DomainBox | None = None


def _parse_params(text: str) -> dict:
    params: dict = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"malformed parameter {item!r} (expected key=value)")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def _parse_inline(text: str) -> ShapeSpec:
    body, _, domain_text = text.partition("@")
    sources = tuple(s.strip() for s in body.split(";") if s.strip())
    if not sources:
        raise ConfigError("inline shape needs at least one coordinate expression")
    if len(sources) % 2 != 0:
        raise ConfigError(
            f"inline shape needs 2n coordinate expressions, got {len(sources)}"
        )
    n = len(sources) // 2
    lows, highs, periodic = [], [], []
    axis_specs = [s for s in domain_text.split(",") if s.strip()] if domain_text else []
    if axis_specs and len(axis_specs) != n:
        raise ConfigError(f"expected {n} domain axes, got {len(axis_specs)}")
    for k in range(n):
        if axis_specs:
            parts = axis_specs[k].split(":")
            if len(parts) not in (2, 3):
                raise ConfigError(f"malformed domain axis {axis_specs[k]!r}")
            try:
                lo, hi = float(parts[0]), float(parts[1])
            except ValueError:
                raise ConfigError(f"malformed domain axis {axis_specs[k]!r}") from None
            per = len(parts) == 3 and parts[2] in ("p", "periodic")
        else:
            lo, hi, per = 0.0, 1.0, False
        lows.append(lo)
        highs.append(hi)
        periodic.append(per)
    return ShapeSpec(kind="inline", name=text, sources=sources,
                     domain=DomainBox(lows, highs, tuple(periodic)))


def parse_shape_spec(text: str) -> ShapeSpec:
    text = text.strip()
    if not text:
        raise ConfigError("empty shape spec")
    if text.startswith("expr:"):
        return _parse_inline(text[len("expr:"):])
    name, _, param_text = text.partition(":")
    return ShapeSpec(kind="catalog", name=name, params=_parse_params(param_text))


def build_shape(spec, default_seed: int = 42) -> ParametricImmersion:
    """Materialize a ShapeSpec (or its text form) as an immersion."""
    if isinstance(spec, str):
        spec = parse_shape_spec(spec)
    try:
        if spec.kind == "inline":
            return expression_immersion(f"expr:{spec.name}", spec.sources, spec.domain)
        name, params = spec.name, spec.params
        if name == "line":
            return line()
        if name == "circle":
            return circle(float(params.get("r", 1.0)))
        if name == "plane":
            return plane(n=int(params.get("n", 2)))
        if name == "su-plane":
            return su_plane(int(params.get("seed", default_seed)))
        if name == "product-torus":
            keys = sorted(k for k in params if k.startswith("r"))
            radii = [float(params[k]) for k in keys] or [1.0, 0.5]
            return product_torus(radii)
        if name == "gradient-graph":
            if "phi" not in params:
                raise ConfigError("gradient-graph needs phi=<expression>")
            return gradient_graph(params["phi"])
    except (ValueError, ParseError) as exc:
        raise ConfigError(f"invalid shape spec: {exc}") from exc
    raise ConfigError(f"unknown catalog shape {spec.name!r}")


def build_loop(imm: ParametricImmersion, spec: str) -> LoopPath:
    """Materialize a --loop argument against an immersion's domain.

    Accepts ``full`` (one-dimensional periodic domains), ``gen:k`` with a
    1-based periodic axis index, or ``expr:<e1>;...;<en>`` giving the loop
    coordinates as expressions in t (velocities are taken symbolically).
    """
    spec = spec.strip()
    try:
        if spec == "full":
            return full_loop(imm.domain)
        if spec.startswith("gen:"):
            axis = int(spec[len("gen:"):]) - 1
            if axis < 0 or axis >= imm.n:
                raise ValueError(f"axis index out of range in {spec!r}")
            return generator_loop(imm.domain, axis)
        if spec.startswith("expr:"):
            sources = [s for s in spec[len("expr:"):].split(";") if s.strip()]
            if len(sources) != imm.n:
                raise ValueError(
                    f"loop needs {imm.n} coordinate expressions, got {len(sources)}"
                )
            exprs = [parse_expression(s) for s in sources]
            speeds = [differentiate(e, "t") for e in exprs]

            def point(t: float) -> np.ndarray:
                return np.array([e.evaluate(t=t) for e in exprs])

            def velocity(t: float) -> np.ndarray:
                return np.array([e.evaluate(t=t) for e in speeds])

            loop = LoopPath(point=point, velocity=velocity, loop_id=spec)
            loop.validate_closed(imm.domain)
            return loop
    except (ValueError, ParseError) as exc:
        raise ConfigError(f"invalid loop spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown loop spec {spec!r}")


def catalog_entries() -> list[dict]:
    """Human-readable catalog listing for the CLI."""
    return [
        {"id": "line", "parameters": "", "notes": "flat closed geodesic, n=1, minimal"},
        {"id": "circle", "parameters": "r>0", "notes": "index 2 on the full loop"},
        {"id": "plane", "parameters": "n in 1..9", "notes": "standard real n-plane"},
        {"id": "su-plane", "parameters": "seed", "notes": "minimal flat 2-torus, angle 1"},
        {"id": "product-torus", "parameters": "r1>0,r2>0,...",
         "notes": "index 2 on every generator"},
        {"id": "gradient-graph", "parameters": "phi=<expression>",
         "notes": "gradient graph, finite-difference jets"},
    ]
