"""Load and serve the XML specifications of installed apps and example sets.

An *app* config declares how one locally installed command-line tool is
executed: a command template with ``_ei_*`` placeholder tokens plus the
parameters the tool accepts.  An *examples* config publishes a named tree
of example files (URL- or github-backed).  Config syntax is documented in
``docs/app-config.md``.

Registries are immutable values: a reload builds a fresh one and swaps it
in, so concurrent readers never observe a half-loaded state.
"""

from __future__ import annotations

import os
import re
import shutil
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

DEFAULT_TIMEOUT_S = 60.0
DEFAULT_MAX_OUTPUT_BYTES = 10 * 1024 * 1024

#: The eight recognized command-template placeholders.
TEMPLATE_PARAMETERS = (
    "_ei_parameters",
    "_ei_files",
    "_ei_outline",
    "_ei_execid",
    "_ei_stream",
    "_ei_download",
    "_ei_sessionid",
    "_ei_clientid",
)

_ID_RE = re.compile(r"^[A-Za-z0-9_\-]+$")

_KIND_BY_TAG = {
    "selectone": "single-choice",
    "selectmany": "multi-choice",
    "flag": "flag",
    "textfield": "free-text",
}
_TAG_BY_KIND = {kind: tag for tag, kind in _KIND_BY_TAG.items()}

CHOICE_KINDS = ("single-choice", "multi-choice")


class RegistryLoadError(OSError):
    """The config directory cannot be read at all."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "fatal" or "warning"
    message: str
    source: str | None = None
    line: int | None = None
    column: int | None = None

    @property
    def fatal(self) -> bool:
        return self.severity == "fatal"

    def __str__(self) -> str:
        where = self.source or "<config>"
        if self.line is not None:
            where += f":{self.line}"
            if self.column is not None:
                where += f":{self.column}"
        return f"{self.severity}: {where}: {self.message}"


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: str  # single-choice | multi-choice | flag | free-text
    options: tuple[str, ...] = ()
    defaults: tuple[str, ...] = ()


@dataclass(frozen=True)
class ParamSection:
    prefix: str = "-"
    check: bool = True
    params: tuple[ParameterSpec, ...] = ()

    def find(self, name: str) -> ParameterSpec | None:
        for param in self.params:
            if param.name == name:
                return param
        return None


@dataclass(frozen=True)
class AppSpec:
    id: str
    title: str
    visible: bool
    cmdline_template: str
    param_section: ParamSection
    timeout_s: float
    max_output_bytes: int


@dataclass(frozen=True)
class Folder:
    name: str
    children: tuple["ExampleNode", ...] = ()


@dataclass(frozen=True)
class FileRef:
    name: str
    url: str


@dataclass(frozen=True)
class GithubRef:
    owner: str
    repo: str
    branch: str
    path: str


ExampleNode = Union[Folder, FileRef, GithubRef]


@dataclass(frozen=True)
class ExampleSet:
    id: str
    root: ExampleNode


@dataclass(frozen=True)
class AppSummary:
    id: str
    title: str
    params: tuple[ParameterSpec, ...]


@dataclass(frozen=True)
class Registry:
    apps: dict[str, AppSpec] = field(default_factory=dict)
    example_sets: dict[str, ExampleSet] = field(default_factory=dict)
    load_diagnostics: tuple[Diagnostic, ...] = ()


# ---------------------------------------------------------------------------
# App config parsing
# ---------------------------------------------------------------------------


def parse_app_spec(
    xml_text: str,
    default_timeout_s: float = DEFAULT_TIMEOUT_S,
    default_max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES,
    source: str | None = None,
) -> tuple[AppSpec | None, list[Diagnostic]]:
    """Parse one app config.

    Returns ``(spec, diagnostics)``; the spec is None when any diagnostic
    is fatal.  Unrecognized elements and attributes only warn, so configs
    written for newer servers still load.  After a successful parse every
    field holds a concrete value (absent attributes fall back to their
    documented defaults).
    """
    diags: list[Diagnostic] = []
    root = _parse_xml(xml_text, source, diags)
    if root is None:
        return None, diags
    if root.tag != "app":
        diags.append(_fatal(f"root element is <{root.tag}>, expected <app>", source))
        return None, diags

    app_id = root.get("id")
    if not app_id or not _ID_RE.match(app_id):
        diags.append(_fatal("app is missing a valid id (letters, digits, _ and - only)", source))
        app_id = None

    visible = _bool_attr(root, "visible", default=True, diags=diags, source=source)
    title = root.get("title") or app_id or ""

    template: str | None = None
    timeout_s = default_timeout_s
    max_output_bytes = default_max_output_bytes
    section = ParamSection()

    seen_execinfo = False
    for child in root:
        if child.tag == "execinfo":
            seen_execinfo = True
            template, timeout_s, max_output_bytes = _parse_execinfo(
                child, default_timeout_s, default_max_output_bytes, diags, source
            )
        elif child.tag == "parameters":
            section = _parse_parameters(child, diags, source)
        else:
            diags.append(_warning(f"unknown element <{child.tag}> under <app>, ignored", source))

    if not seen_execinfo:
        diags.append(_fatal("app has no <execinfo> section", source))
    if seen_execinfo and template:
        _check_template(template, diags, source)

    if any(d.fatal for d in diags):
        return None, diags
    assert app_id is not None and template is not None
    spec = AppSpec(
        id=app_id,
        title=title,
        visible=visible,
        cmdline_template=template,
        param_section=section,
        timeout_s=timeout_s,
        max_output_bytes=max_output_bytes,
    )
    return spec, diags


def _parse_execinfo(
    elem: ET.Element,
    default_timeout_s: float,
    default_max_output_bytes: int,
    diags: list[Diagnostic],
    source: str | None,
) -> tuple[str | None, float, int]:
    method = elem.get("method", "cmdline")
    if method != "cmdline":
        diags.append(_fatal(f"unsupported execution method {method!r}", source))

    timeout_s = _positive_float_attr(elem, "timeout", default_timeout_s, diags, source)
    max_output = int(_positive_float_attr(elem, "maxoutput", default_max_output_bytes, diags, source))

    template: str | None = None
    for child in elem:
        if child.tag == "cmdlineapp":
            template = (child.text or "").strip()
        else:
            diags.append(_warning(f"unknown element <{child.tag}> under <execinfo>, ignored", source))
    if not template:
        diags.append(_fatal("execinfo has no <cmdlineapp> command template", source))
        template = None
    return template, timeout_s, max_output


def _check_template(template: str, diags: list[Diagnostic], source: str | None) -> None:
    tokens = template.split()
    if tokens[0].startswith("_ei_"):
        diags.append(_fatal("command template must start with the program path", source))
        return
    for token in tokens:
        if token.startswith("_ei_") and token not in TEMPLATE_PARAMETERS:
            diags.append(_fatal(f"unrecognized template parameter {token!r}", source))
    # Tools may legitimately be configured before they are installed.
    program = tokens[0]
    if os.sep in program:
        found = os.path.isfile(program) and os.access(program, os.X_OK)
    else:
        found = shutil.which(program) is not None
    if not found:
        diags.append(_warning(f"program {program!r} not found or not executable", source))


def _parse_parameters(
    elem: ET.Element, diags: list[Diagnostic], source: str | None
) -> ParamSection:
    prefix = elem.get("prefix", "-")
    check = _bool_attr(elem, "check", default=True, diags=diags, source=source)
    params: list[ParameterSpec] = []
    seen: set[str] = set()
    for child in elem:
        kind = _KIND_BY_TAG.get(child.tag)
        if kind is None:
            diags.append(_warning(f"unknown element <{child.tag}> under <parameters>, ignored", source))
            continue
        param = _parse_parameter(child, kind, diags, source)
        if param is None:
            continue
        if param.name in seen:
            diags.append(_fatal(f"duplicate parameter name {param.name!r}", source))
            continue
        seen.add(param.name)
        params.append(param)
    return ParamSection(prefix=prefix, check=check, params=tuple(params))


def _parse_parameter(
    elem: ET.Element, kind: str, diags: list[Diagnostic], source: str | None
) -> ParameterSpec | None:
    name = elem.get("name")
    if not name:
        diags.append(_fatal(f"<{elem.tag}> parameter is missing a name", source))
        return None

    options: list[str] = []
    defaults: list[str] = []
    for child in elem:
        if child.tag == "option":
            value = child.get("value")
            if value is None:
                diags.append(_fatal(f"option of parameter {name!r} has no value", source))
                continue
            if kind not in CHOICE_KINDS:
                diags.append(_warning(f"parameter {name!r} ({kind}) takes no options, ignored", source))
                continue
            options.append(value)
            if child.get("default", "false") == "true":
                defaults.append(value)
        else:
            diags.append(_warning(f"unknown element <{child.tag}> under <{elem.tag}>, ignored", source))

    if kind in CHOICE_KINDS and not options:
        diags.append(_fatal(f"choice parameter {name!r} declares no options", source))
        return None
    if kind == "single-choice" and len(defaults) > 1:
        diags.append(_fatal(f"single-choice parameter {name!r} has more than one default", source))
        return None
    if kind == "flag":
        if elem.get("default", "false") == "true":
            defaults = ["true"]
    elif kind == "free-text":
        default = elem.get("default")
        if default is not None:
            defaults = [default]
    return ParameterSpec(name=name, kind=kind, options=tuple(options), defaults=tuple(defaults))


def serialize_app_spec(spec: AppSpec) -> str:
    """Emit canonical config XML that reparses to an equal spec."""
    root = ET.Element("app", id=spec.id, visible="true" if spec.visible else "false")
    if spec.title != spec.id:
        root.set("title", spec.title)
    execinfo = ET.SubElement(
        root,
        "execinfo",
        method="cmdline",
        timeout=_format_number(spec.timeout_s),
        maxoutput=str(spec.max_output_bytes),
    )
    ET.SubElement(execinfo, "cmdlineapp").text = spec.cmdline_template
    section = spec.param_section
    parameters = ET.SubElement(
        root, "parameters", prefix=section.prefix, check="true" if section.check else "false"
    )
    for param in section.params:
        elem = ET.SubElement(parameters, _TAG_BY_KIND[param.kind], name=param.name)
        if param.kind == "flag" and param.defaults == ("true",):
            elem.set("default", "true")
        elif param.kind == "free-text" and param.defaults:
            elem.set("default", param.defaults[0])
        for value in param.options:
            option = ET.SubElement(elem, "option", value=value)
            if value in param.defaults:
                option.set("default", "true")
    return ET.tostring(root, encoding="unicode")


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else str(value)


# ---------------------------------------------------------------------------
# Example config parsing
# ---------------------------------------------------------------------------


def parse_example_config(
    xml_text: str, source: str | None = None
) -> tuple[list[ExampleSet], list[Diagnostic]]:
    """Parse an example-set config into trees of folders, files, and github refs.

    No network access happens here: URLs and github coordinates are kept
    verbatim for clients to resolve.  A fatal defect inside one set
    excludes that set only.
    """
    diags: list[Diagnostic] = []
    root = _parse_xml(xml_text, source, diags)
    if root is None:
        return [], diags
    if root.tag != "examples":
        diags.append(_fatal(f"root element is <{root.tag}>, expected <examples>", source))
        return [], diags

    sets: list[ExampleSet] = []
    for child in root:
        if child.tag != "exset":
            diags.append(_warning(f"unknown element <{child.tag}> under <examples>, ignored", source))
            continue
        set_id = child.get("id")
        if not set_id or not _ID_RE.match(set_id):
            diags.append(_fatal("exset is missing a valid id", source))
            continue
        before = len([d for d in diags if d.fatal])
        children = _parse_example_nodes(child, diags, source)
        if len([d for d in diags if d.fatal]) > before:
            continue  # defect inside this set; skip it
        if len(children) == 1:
            root_node: ExampleNode = children[0]
        else:
            root_node = Folder(name=set_id, children=tuple(children))
        sets.append(ExampleSet(id=set_id, root=root_node))
    return sets, diags


def _parse_example_nodes(
    parent: ET.Element, diags: list[Diagnostic], source: str | None
) -> list[ExampleNode]:
    nodes: list[ExampleNode] = []
    for elem in parent:
        if elem.tag == "folder":
            name = elem.get("name")
            if not name:
                diags.append(_fatal("folder has an empty name", source))
                continue
            nodes.append(Folder(name=name, children=tuple(_parse_example_nodes(elem, diags, source))))
        elif elem.tag == "file":
            name = elem.get("name")
            url = elem.get("url")
            if not name:
                diags.append(_fatal("file has an empty name", source))
                continue
            if not url:
                diags.append(_fatal(f"file {name!r} has no url (a link must be provided per file)", source))
                continue
            nodes.append(FileRef(name=name, url=url))
        elif elem.tag == "github":
            missing = [a for a in ("owner", "repo", "branch", "path") if elem.get(a) is None]
            if missing:
                diags.append(_fatal(f"github reference is missing {', '.join(missing)}", source))
                continue
            nodes.append(
                GithubRef(
                    owner=elem.get("owner", ""),
                    repo=elem.get("repo", ""),
                    branch=elem.get("branch", ""),
                    path=elem.get("path", ""),
                )
            )
        else:
            diags.append(_warning(f"unknown element <{elem.tag}> in example tree, ignored", source))
    return nodes


# ---------------------------------------------------------------------------
# Registry loading
# ---------------------------------------------------------------------------


def load_registry(
    config_dir: str | Path,
    default_timeout_s: float = DEFAULT_TIMEOUT_S,
    default_max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES,
) -> Registry:
    """Parse every ``*.xml`` under config_dir into a fresh immutable Registry.

    App and example configs are distinguished by their root element.  Apps
    (or example sets) with fatal diagnostics are excluded and reported via
    ``load_diagnostics``; on id collisions the first file in sorted order
    wins.
    """
    config_dir = Path(config_dir)
    if not config_dir.is_dir():
        raise RegistryLoadError(f"config directory {config_dir} does not exist or is unreadable")

    apps: dict[str, AppSpec] = {}
    example_sets: dict[str, ExampleSet] = {}
    diags: list[Diagnostic] = []

    for path in sorted(config_dir.rglob("*.xml")):
        source = str(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            diags.append(_fatal(f"cannot read config file: {exc}", source))
            continue
        probe_diags: list[Diagnostic] = []
        root = _parse_xml(text, source, probe_diags)
        if root is None:
            diags.extend(probe_diags)
            continue
        if root.tag == "app":
            spec, app_diags = parse_app_spec(
                text, default_timeout_s, default_max_output_bytes, source=source
            )
            diags.extend(app_diags)
            if spec is None:
                continue
            if spec.id in apps:
                diags.append(_fatal(f"duplicate app id {spec.id!r}, keeping the first definition", source))
                continue
            apps[spec.id] = spec
        elif root.tag == "examples":
            sets, set_diags = parse_example_config(text, source=source)
            diags.extend(set_diags)
            for exset in sets:
                if exset.id in example_sets:
                    diags.append(
                        _fatal(f"duplicate example set id {exset.id!r}, keeping the first definition", source)
                    )
                    continue
                example_sets[exset.id] = exset
        else:
            diags.append(_warning(f"unrecognized config root <{root.tag}>, file ignored", source))

    return Registry(apps=apps, example_sets=example_sets, load_diagnostics=tuple(diags))


def list_apps(registry: Registry, include_hidden: bool = False) -> list[AppSummary]:
    """Summaries for client tool menus, with full parameter specs so
    settings UIs can be generated without another round trip."""
    summaries = [
        AppSummary(id=spec.id, title=spec.title, params=spec.param_section.params)
        for spec in registry.apps.values()
        if include_hidden or spec.visible
    ]
    summaries.sort(key=lambda s: s.id)
    return summaries


def get_app(registry: Registry, app_id: str) -> AppSpec | None:
    """Look up an app by id. Hidden apps are unlisted but still reachable."""
    return registry.apps.get(app_id)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _parse_xml(
    xml_text: str, source: str | None, diags: list[Diagnostic]
) -> ET.Element | None:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        diags.append(
            Diagnostic("fatal", f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}",
                       source=source, line=line, column=column)
        )
        return None


def _bool_attr(
    elem: ET.Element, name: str, default: bool, diags: list[Diagnostic], source: str | None
) -> bool:
    raw = elem.get(name)
    if raw is None:
        return default
    if raw == "true":
        return True
    if raw == "false":
        return False
    diags.append(_warning(f"attribute {name}={raw!r} is not true/false, using default", source))
    return default


def _positive_float_attr(
    elem: ET.Element, name: str, default: float, diags: list[Diagnostic], source: str | None
) -> float:
    raw = elem.get(name)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError:
        value = -1.0
    if value <= 0:
        diags.append(_warning(f"attribute {name}={raw!r} is not a positive number, using default", source))
        return default
    return value


def _fatal(message: str, source: str | None) -> Diagnostic:
    return Diagnostic("fatal", message, source=source)


def _warning(message: str, source: str | None) -> Diagnostic:
    return Diagnostic("warning", message, source=source)
