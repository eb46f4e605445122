"""JSON descriptors for kernels, kernel samplers and rate measures.

Errors name the offending field with a dotted path such as
``lambda.atoms[1].rate``.
"""
from __future__ import annotations

import json
import os
from typing import Any

from .classes import BUILTIN_IDS, FiniteClass, get_class, load_class, universal_class
from .ctprocess import PaintboxFamily, RateMeasure, RatedAtom, lift_alpha_measure
from .errors import ExchMarkovError, MalformedInputError
from .kernels import (CoagKernel, ConjugatedKernel, ConjugatedSampler, CutPasteKernel, CutPasteSampler, FragKernel,
                      IdentityKernel, Kernel, KernelSampler, KingmanStepSampler, PaintboxSampler, PointMass,
                      ResamplerKernel, ResamplerSampler, SiteKernel, SiteSampler, compose, kernel_from_target,
                      single_site_resampler, UNBOUNDED)
from .structures import FiniteStructure, Injection

# preferred builtin class for each kernel kind
DEFAULT_CLASS = {"coag": "partitions", "frag": "partitions", "cutpaste": "sets", "flip": "sets",
                 "site": "sets", "resampler": "ternary"}

# order in which builtin classes are tried when inferring a class from a structure
_INFERENCE_ORDER = ("sets", "colorings", "graphs", "tournaments", "digraphs", "partitions", "linear-orders",
                    "colored-graphs", "ternary")


def load_json_arg(text: str, field: str) -> Any:
    """A JSON value from a file path, an inline JSON string, or a bare name."""
    if os.path.exists(text):
        try:
            with open(text, encoding="utf-8") as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedInputError(f"{field}: cannot read {text}: {exc}") from exc
    stripped = text.strip()
    if stripped[:1] in "{[":
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{field}: invalid JSON: {exc}") from exc
    if stripped.replace("_", "").replace("-", "").isalnum():
        return {"kind": stripped}
    raise MalformedInputError(f"{field}: {text!r} is neither a file, JSON, nor a known name")


def _get(d: dict, key: str, path: str, default=...):
    if not isinstance(d, dict):
        raise MalformedInputError(f"{path}: expected an object")
    if key not in d:
        if default is ...:
            raise MalformedInputError(f"{path}.{key}: missing")
        return default
    return d[key]


def _num(d, key, path, default=..., positive=False, nonneg=False) -> float:
    v = _get(d, key, path, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedInputError(f"{path}.{key}: expected a number, got {v!r}")
    if positive and not v > 0:
        raise MalformedInputError(f"{path}.{key}: must be positive, got {v}")
    if nonneg and v < 0:
        raise MalformedInputError(f"{path}.{key}: must be nonnegative, got {v}")
    return float(v)


def _int(d, key, path, default=...) -> int:
    v = _get(d, key, path, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise MalformedInputError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _structure(data, path) -> FiniteStructure:
    try:
        return FiniteStructure.from_dict(data)
    except ExchMarkovError as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise MalformedInputError(f"{path}: {exc}") from exc


def _perm(data, path) -> Injection:
    if not isinstance(data, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in data):
        raise MalformedInputError(f"{path}: expected a list of integers")
    if sorted(data) != list(range(1, len(data) + 1)):
        raise MalformedInputError(f"{path}: {data} is not a permutation of [{len(data)}]")
    return Injection(tuple(data), len(data))


def _class_of(d: dict, path: str, fallback: str | None) -> FiniteClass:
    spec = d.get("class", fallback) if isinstance(d, dict) else fallback
    if spec is None:
        raise MalformedInputError(f"{path}.class: missing and not inferable")
    try:
        return load_class(spec) if isinstance(spec, str) else _class_from_obj(spec, path)
    except ExchMarkovError as exc:
        raise MalformedInputError(f"{path}.class: {exc}") from exc
    except KeyError as exc:
        raise MalformedInputError(f"{path}.class: unknown class {spec!r}") from exc


def _class_from_obj(spec, path):
    from .classes import class_from_json

    return class_from_json(spec)


def infer_class(M: FiniteStructure) -> FiniteClass:
    """Builtin class matching M's signature that contains M, else the universal class."""
    for cid in _INFERENCE_ORDER:
        K = get_class(cid)
        if K.sig == M.sig and K.contains(M):
            return K
    return universal_class(M.sig)


def kernel_from_descriptor(d: dict, path: str = "kernel", cls: FiniteClass | None = None) -> Kernel:
    kind = _get(d, "kind", path)
    if kind == "identity":
        return IdentityKernel(cls or _class_of(d, path, None))
    if kind == "coag":
        return CoagKernel(_structure(_get(d, "pi", path), f"{path}.pi"), n_max=_int(d, "n_max", path, UNBOUNDED))
    if kind == "frag":
        return FragKernel(_structure(_get(d, "pi", path), f"{path}.pi"), _int(d, "k", path),
                          n_max=_int(d, "n_max", path, UNBOUNDED))
    if kind == "cutpaste":
        return CutPasteKernel(_num(d, "theta0", path), _num(d, "theta1", path), _int(d, "seed", path, 0))
    if kind == "resampler":
        variant = _get(d, "variant", path)
        seed = _int(d, "seed", path, 0)
        if "s" in d:
            return single_site_resampler(_get(d, "s", path), variant, seed)
        return ResamplerKernel(_int(d, "anchor", path, 1), variant, seed)
    if kind in ("flip", "site"):
        return SiteKernel(_int(d, "site", path), d.get("mode", "flip"), _num(d, "theta", path, 0.5),
                          _int(d, "seed", path, 0))
    if kind == "conjugate":
        inner = kernel_from_descriptor(_get(d, "kernel", path), f"{path}.kernel", cls)
        return ConjugatedKernel(inner, _perm(_get(d, "perm", path), f"{path}.perm"))
    if kind == "compose":
        parts = _get(d, "kernels", path)
        if not isinstance(parts, list) or not parts:
            raise MalformedInputError(f"{path}.kernels: expected a nonempty list")
        ks = [kernel_from_descriptor(p, f"{path}.kernels[{i}]", cls) for i, p in enumerate(parts)]
        out = ks[-1]
        for k in reversed(ks[:-1]):
            out = compose(k, out)
        return out
    if kind == "from_target":
        M = _structure(_get(d, "M", path), f"{path}.M")
        Y = _structure(_get(d, "Y", path), f"{path}.Y")
        klass = _class_of(d, path, None) if "class" in d else None
        return kernel_from_target(M, Y, klass)
    raise MalformedInputError(f"{path}.kind: unknown kernel kind {kind!r}")


_KERNEL_KINDS = {"coag", "frag", "flip", "compose", "from_target"}


def sampler_from_descriptor(d: dict, path: str = "mu", cls: FiniteClass | None = None) -> KernelSampler:
    kind = _get(d, "kind", path)
    if kind == "identity":
        return PointMass(IdentityKernel(_class_of(d, path, None) if "class" in d or cls is None else cls))
    if kind == "point":
        return PointMass(kernel_from_descriptor(_get(d, "kernel", path), f"{path}.kernel", cls))
    if kind == "cutpaste":
        if "seed" in d:
            return PointMass(kernel_from_descriptor(d, path, cls))
        return CutPasteSampler(_num(d, "theta0", path), _num(d, "theta1", path))
    if kind == "paintbox":
        s = _get(d, "s", path)
        if not isinstance(s, list):
            raise MalformedInputError(f"{path}.s: expected a list of numbers")
        return PaintboxSampler(s, d.get("mode", "coag"), _int(d, "k", path, 1))
    if kind == "kingman_step":
        return KingmanStepSampler(_int(d, "N", path))
    if kind == "resampler":
        if "seed" in d:
            return PointMass(kernel_from_descriptor(d, path, cls))
        return ResamplerSampler(_get(d, "variant", path), _int(d, "anchor", path, 1))
    if kind == "site":
        return SiteSampler(_int(d, "site", path, 1), d.get("mode", "flip"), _num(d, "theta", path, 0.5))
    if kind == "conjugate":
        base = sampler_from_descriptor(_get(d, "sampler", path), f"{path}.sampler", cls)
        return ConjugatedSampler(base, _perm(_get(d, "perm", path), f"{path}.perm"))
    if kind in _KERNEL_KINDS:
        return PointMass(kernel_from_descriptor(d, path, cls))
    raise MalformedInputError(f"{path}.kind: unknown sampler kind {kind!r}")


def measure_from_descriptor(d: dict, path: str = "lambda") -> RateMeasure:
    if not isinstance(d, dict):
        raise MalformedInputError(f"{path}: expected an object")
    known = {"atoms", "kingman", "paintbox", "erosion", "lifted", "class"}
    extra = set(d) - known
    if extra:
        raise MalformedInputError(f"{path}.{sorted(extra)[0]}: unknown field")
    cls = _class_of(d, path, None) if "class" in d else None
    atoms = []
    for i, a in enumerate(d.get("atoms", [])):
        p = f"{path}.atoms[{i}]"
        atoms.append(RatedAtom(_num(a, "rate", p, positive=True),
                               sampler_from_descriptor(_get(a, "sampler", p), f"{p}.sampler", cls)))
    fams = []
    pb = d.get("paintbox")
    if pb is not None:
        for f, fam in enumerate(pb if isinstance(pb, list) else [pb]):
            p = f"{path}.paintbox" + (f"[{f}]" if isinstance(pb, list) else "")
            entries = []
            for i, a in enumerate(_get(fam, "atoms", p)):
                entries.append((_num(a, "w", f"{p}.atoms[{i}]", positive=True), tuple(_get(a, "s", f"{p}.atoms[{i}]"))))
            fams.append(PaintboxFamily(_get(fam, "mode", p, "coag"), tuple(entries)))
    lam = RateMeasure(tuple(atoms), _num(d, "kingman", path, 0.0, nonneg=True), tuple(fams),
                      _num(d, "erosion", path, 0.0, nonneg=True), cls)
    for i, block in enumerate(d.get("lifted", [])):
        p = f"{path}.lifted[{i}]"
        alpha = _get(block, "alpha", p)
        n = _int(block, "n", p)
        raw = []
        for k, a in enumerate(_get(block, "atoms", p)):
            q = f"{p}.atoms[{k}]"
            raw.append((_num(a, "rate", q, positive=True), sampler_from_descriptor(_get(a, "sampler", q), f"{q}.sampler", cls)))
        lam = lam + lift_alpha_measure(raw, alpha, n)
    return lam


__all__ = ["BUILTIN_IDS", "DEFAULT_CLASS", "infer_class", "kernel_from_descriptor", "load_json_arg",
           "measure_from_descriptor", "sampler_from_descriptor"]
