"""Turn a validated execution request into an injection-proof argument vector.

The safety mechanism is simple: the command template is tokenized on
whitespace before any client data exists, and client-supplied strings only
ever become *whole argv tokens*.  Nothing here is passed through a shell,
so no client value can split tokens, chain commands, or start a different
program.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .registry import TEMPLATE_PARAMETERS, ParamSection


class TemplateError(ValueError):
    """The command template references an unrecognized placeholder."""


class FileMaterializeError(ValueError):
    """A request file escapes its working directory or collides."""


@dataclass(frozen=True)
class Violation:
    param: str
    reason: str

    def __str__(self) -> str:
        return f"{self.param}: {self.reason}"


@dataclass(frozen=True)
class ExecutionRequest:
    """One client "execute" call, after envelope decoding.

    Virtual file paths are relative, contain no ``..`` segment, and are
    unique within the request (see validate_virtual_paths).
    """

    app_id: str
    parameters: dict[str, list[str]] = field(default_factory=dict)
    files: tuple[tuple[str, bytes], ...] = ()
    outline_entities: tuple[str, ...] = ()
    client_id: str = "unknown"
    session_token: str | None = None


@dataclass(frozen=True)
class ExpansionContext:
    """Concrete values for the eight template placeholders of one execution."""

    serialized_params: tuple[str, ...] = ()
    file_paths: tuple[str, ...] = ()
    outline_tokens: tuple[str, ...] = ()
    execid: str = ""
    stream_dir: str = ""
    download_dir: str = ""
    session_id: str = ""
    client_id: str = ""


def validate_parameters(
    section: ParamSection, provided: Mapping[str, Sequence[str]]
) -> list[Violation]:
    """Check provided values against the app's parameter section.

    With ``check`` off everything passes through -- values are still
    opaque single tokens, never shell-interpreted, so the only thing lost
    is early feedback.
    """
    if not section.check:
        return []
    violations: list[Violation] = []
    for name, values in provided.items():
        spec = section.find(name)
        if spec is None:
            violations.append(Violation(name, "unknown parameter"))
            continue
        if spec.kind == "flag":
            # No value token ever reaches the command line; the explicit
            # true/false forms exist so a default-on flag can be turned off.
            if list(values) not in ([], ["true"], ["false"]):
                violations.append(Violation(name, "flag parameters take no value"))
        elif spec.kind == "single-choice":
            if len(values) > 1:
                violations.append(Violation(name, "takes a single value"))
            for value in values:
                if value not in spec.options:
                    violations.append(Violation(name, f"{value!r} is not an option"))
        elif spec.kind == "multi-choice":
            for value in values:
                if value not in spec.options:
                    violations.append(Violation(name, f"{value!r} is not an option"))
        else:  # free-text
            if len(values) > 1:
                violations.append(Violation(name, "takes a single value"))
    return violations


def serialize_parameters(
    section: ParamSection, provided: Mapping[str, Sequence[str]]
) -> list[str]:
    """Render parameters as argv tokens: ``prefix+name`` then the value.

    Parameters follow section declaration order regardless of request
    order; multi-valued parameters repeat the name token per value; flags
    emit just the name token when on; parameters with neither a provided
    value nor a default emit nothing.  Every value is exactly one token.
    """
    tokens: list[str] = []
    for spec in section.params:
        if spec.name in provided:
            values: Sequence[str] = provided[spec.name]
            flag_on = spec.kind == "flag" and (not values or list(values) == ["true"])
        else:
            values = spec.defaults
            flag_on = spec.kind == "flag" and spec.defaults == ("true",)
        name_token = section.prefix + spec.name
        if spec.kind == "flag":
            if flag_on:
                tokens.append(name_token)
            elif spec.name in provided and list(values) not in ([], ["true"], ["false"]):
                # Only reachable with check off; pass the raw values through.
                for value in values:
                    tokens.extend((name_token, value))
            continue
        for value in values:
            tokens.extend((name_token, value))
    # Unknown names only survive validation when check is off; append them
    # after the declared parameters, in request order.
    known = {spec.name for spec in section.params}
    for name, values in provided.items():
        if name in known:
            continue
        name_token = section.prefix + name
        if not values:
            tokens.append(name_token)
        for value in values:
            tokens.extend((name_token, value))
    return tokens


def expand_template(template: str, ctx: ExpansionContext) -> list[str]:
    """Expand a command template into a concrete argv.

    The template is split on whitespace; placeholder tokens expand to zero
    or more context tokens, everything else passes through verbatim.  A
    pure function of (template, ctx): client data cannot create tokens.
    """
    expansions: dict[str, tuple[str, ...]] = {
        "_ei_parameters": ctx.serialized_params,
        "_ei_files": ctx.file_paths,
        "_ei_outline": ctx.outline_tokens,
        "_ei_execid": (ctx.execid,),
        "_ei_stream": (ctx.stream_dir,),
        "_ei_download": (ctx.download_dir,),
        "_ei_sessionid": (ctx.session_id,),
        "_ei_clientid": (ctx.client_id,),
    }
    argv: list[str] = []
    for token in template.split():
        if token.startswith("_ei_"):
            if token not in TEMPLATE_PARAMETERS:
                # Caught at config load; defend anyway.
                raise TemplateError(f"unrecognized template parameter {token!r}")
            argv.extend(expansions[token])
        else:
            argv.append(token)
    if not argv:
        raise TemplateError("empty command template")
    return argv


def validate_virtual_paths(paths: Sequence[str]) -> str | None:
    """Reason the request's file paths are unacceptable, or None when fine."""
    seen: set[str] = set()
    for raw in paths:
        if not raw or "\x00" in raw:
            return f"empty or malformed file path {raw!r}"
        if raw.startswith(("/", "\\")) or "\\" in raw:
            return f"file path {raw!r} must be relative (forward slashes only)"
        normalized = posixpath.normpath(raw)
        if normalized.startswith("..") or normalized == ".":
            return f"file path {raw!r} escapes the working directory"
        if normalized in seen:
            return f"duplicate file path {raw!r}"
        seen.add(normalized)
    return None


def materialize_files(
    files: Sequence[tuple[str, bytes]], workdir: str | Path
) -> list[str]:
    """Write request files under workdir, preserving relative structure.

    Returns absolute paths in request order.  Any path that would land
    outside workdir after normalization, and any collision between two
    entries, raises :class:`FileMaterializeError`.
    """
    workdir = Path(workdir).resolve()
    reason = validate_virtual_paths([path for path, _ in files])
    if reason is not None:
        raise FileMaterializeError(reason)
    result: list[str] = []
    for raw, content in files:
        target = (workdir / posixpath.normpath(raw)).resolve()
        if workdir != target and workdir not in target.parents:
            raise FileMaterializeError(f"file path {raw!r} escapes the working directory")
        if target.exists():
            raise FileMaterializeError(f"file path {raw!r} collides with an existing entry")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(content)
        result.append(str(target))
    return result
