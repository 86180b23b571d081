"""The EI output language: parse, build, serialize, lint, and render as text.

Tools emit this XML vocabulary on stdout to drive effects in clients:
console prints, editor markers and highlights, dialog boxes, file
downloads, and click-bound actions whose commands are applied on a first
click and undone on the next.  The grammar is documented element by
element in ``docs/output-language.md``.

Documents are plain immutable values; every function here is pure.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Union

OUTCLASSES = ("info", "error", "warning")
CONTENT_FORMATS = ("text", "html", "svg", "graphs")

DEFAULT_POLL_SECONDS = 60

_BARE_FILENAME_RE = re.compile(r"^[^/\\\x00-\x1f]+$")
_POLL_INTERVAL_RE = re.compile(r"^\s*(\d+)\s*(?:s|sec|secs|seconds)?\s*$", re.IGNORECASE)


class EiOutParseError(ValueError):
    """Input is not a well-formed eiout document."""


class EiOutBuildError(ValueError):
    """A document value violates the grammar and cannot be serialized."""


@dataclass(frozen=True)
class LineRegion:
    """A line range in a source file; a single line when to_line is absent.

    Columns (from_col/to_col, 0-based) narrow a highlight within its first
    and last line.
    """

    from_line: int
    to_line: int | None = None
    from_col: int | None = None
    to_col: int | None = None

    def span(self) -> str:
        if self.to_line is None or self.to_line == self.from_line:
            return str(self.from_line)
        return f"{self.from_line}-{self.to_line}"


@dataclass(frozen=True)
class Content:
    """One piece of renderable content.

    The body is opaque for html/svg/graphs; the server and the text
    renderer never reinterpret it.  When stream_execid is set the client
    should poll the server for output chunks of that execution every
    poll_seconds seconds.
    """

    format: str = "text"
    body: str = ""
    stream_execid: str | None = None
    poll_seconds: int | None = None

    @property
    def stream_hint(self) -> tuple[str, int] | None:
        if self.stream_execid is None:
            return None
        poll = DEFAULT_POLL_SECONDS if self.poll_seconds is None else self.poll_seconds
        return (self.stream_execid, poll)


@dataclass(frozen=True)
class PrintOnConsole:
    console_id: str | None = None
    console_title: str | None = None
    contents: tuple[Content, ...] = ()


@dataclass(frozen=True)
class AddMarker:
    dest: str
    outclass: str = "info"
    lines: tuple[LineRegion, ...] = ()
    content: Content | None = None


@dataclass(frozen=True)
class HighlightLines:
    dest: str
    outclass: str = "info"
    regions: tuple[LineRegion, ...] = ()


@dataclass(frozen=True)
class DialogBox:
    box_title: str
    outclass: str = "info"
    box_width: int | None = None
    box_height: int | None = None
    contents: tuple[Content, ...] = ()


@dataclass(frozen=True)
class Download:
    execid: str
    filename: str


EiCommand = Union[PrintOnConsole, AddMarker, HighlightLines, DialogBox, Download]


@dataclass(frozen=True)
class OnCodeLineClick:
    """Commands bound to a marker on the named lines; a second click undoes them."""

    dest: str
    outclass: str = "info"
    lines: tuple[LineRegion, ...] = ()
    commands: tuple[EiCommand, ...] = ()


@dataclass(frozen=True)
class OnClick:
    """Commands bound to clicks on elements matched by CSS-style selectors."""

    selectors: tuple[str, ...] = ()
    commands: tuple[EiCommand, ...] = ()


EiAction = Union[OnCodeLineClick, OnClick]


@dataclass(frozen=True)
class EiOutDocument:
    commands: tuple[EiCommand, ...] = ()
    actions: tuple[EiAction, ...] = ()


@dataclass(frozen=True)
class Lint:
    code: str
    message: str


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse(text: str, warnings: list[str] | None = None) -> EiOutDocument:
    """Parse eiout XML into a document.

    Unknown elements and out-of-range enum attributes are tolerated: they
    are skipped or replaced with defaults, and a note is appended to
    ``warnings`` when a list is supplied.  Structural defects in known
    elements (a line without ``from``, a download without a filename)
    raise :class:`EiOutParseError`.
    """
    sink: list[str] = warnings if warnings is not None else []
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise EiOutParseError(f"not well-formed XML: {exc}") from exc
    if root.tag != "eiout":
        raise EiOutParseError(f"root element is <{root.tag}>, expected <eiout>")

    commands: list[EiCommand] = []
    actions: list[EiAction] = []
    for child in root:
        if child.tag == "eicommands":
            commands.extend(_parse_commands(child, sink))
        elif child.tag == "eiactions":
            actions.extend(_parse_actions(child, sink))
        else:
            sink.append(f"unknown element <{child.tag}> under <eiout>, skipped")
    return EiOutDocument(commands=tuple(commands), actions=tuple(actions))


def _parse_commands(parent: ET.Element, sink: list[str]) -> list[EiCommand]:
    out: list[EiCommand] = []
    for elem in parent:
        cmd = _parse_command(elem, sink)
        if cmd is not None:
            out.append(cmd)
    return out


def _parse_command(elem: ET.Element, sink: list[str]) -> EiCommand | None:
    tag = elem.tag
    if tag == "printonconsole":
        return PrintOnConsole(
            console_id=elem.get("consoleid"),
            console_title=elem.get("consoletitle"),
            contents=_parse_contents(elem, sink),
        )
    if tag == "content":
        # Streaming tools emit a bare <content> command; treat it as a
        # print to the default console.
        return PrintOnConsole(contents=(_parse_content(elem, sink),))
    if tag == "addmarker":
        contents = _parse_contents(elem, sink, allow_lines=True)
        if len(contents) > 1:
            sink.append("<addmarker> carries more than one <content>, extras ignored")
        return AddMarker(
            dest=_require_attr(elem, "dest"),
            outclass=_parse_outclass(elem, sink),
            lines=_parse_lines(elem),
            content=contents[0] if contents else None,
        )
    if tag == "highlightlines":
        return HighlightLines(
            dest=_require_attr(elem, "dest"),
            outclass=_parse_outclass(elem, sink),
            regions=_parse_lines(elem),
        )
    if tag == "dialogbox":
        return DialogBox(
            box_title=_require_attr(elem, "boxtitle"),
            outclass=_parse_outclass(elem, sink),
            box_width=_positive_int_attr(elem, "boxwidth"),
            box_height=_positive_int_attr(elem, "boxheight"),
            contents=_parse_contents(elem, sink),
        )
    if tag == "download":
        filename = _require_attr(elem, "filename")
        if not _BARE_FILENAME_RE.match(filename) or filename in (".", ".."):
            raise EiOutParseError(f"<download> filename {filename!r} is not a bare file name")
        return Download(execid=_require_attr(elem, "execid"), filename=filename)
    sink.append(f"unknown command <{tag}>, skipped")
    return None


def _parse_actions(parent: ET.Element, sink: list[str]) -> list[EiAction]:
    out: list[EiAction] = []
    for elem in parent:
        if elem.tag == "oncodelineclick":
            out.append(
                OnCodeLineClick(
                    dest=_require_attr(elem, "dest"),
                    outclass=_parse_outclass(elem, sink),
                    lines=_parse_lines(elem),
                    commands=_parse_nested_commands(elem, sink),
                )
            )
        elif elem.tag == "onclick":
            out.append(
                OnClick(
                    selectors=_parse_selectors(elem),
                    commands=_parse_nested_commands(elem, sink),
                )
            )
        else:
            sink.append(f"unknown action <{elem.tag}>, skipped")
    return out


def _parse_nested_commands(elem: ET.Element, sink: list[str]) -> tuple[EiCommand, ...]:
    commands: list[EiCommand] = []
    for child in elem:
        if child.tag != "eicommands":
            continue
        for sub in child:
            if sub.tag in ("oncodelineclick", "onclick"):
                raise EiOutParseError(f"action nested inside <{elem.tag}> command list")
            cmd = _parse_command(sub, sink)
            if cmd is not None:
                commands.append(cmd)
    return tuple(commands)


def _parse_selectors(elem: ET.Element) -> tuple[str, ...]:
    elements = elem.find("elements")
    if elements is None:
        raise EiOutParseError("<onclick> is missing its <elements> list")
    selectors: list[str] = []
    for sel in elements:
        if sel.tag != "selector":
            continue
        value = sel.get("value", "").strip()
        if not value or any(ord(ch) < 0x20 for ch in value):
            raise EiOutParseError("<selector> value is empty or not a CSS-style selector")
        selectors.append(value)
    if not selectors:
        raise EiOutParseError("<onclick> declares no selectors")
    return tuple(selectors)


def _parse_lines(elem: ET.Element) -> tuple[LineRegion, ...]:
    lines_elem = elem.find("lines")
    if lines_elem is None:
        raise EiOutParseError(f"<{elem.tag}> is missing its <lines> list")
    regions: list[LineRegion] = []
    for line in lines_elem:
        if line.tag != "line":
            continue
        regions.append(
            LineRegion(
                from_line=_int_attr(line, "from", required=True, minimum=1),
                to_line=_int_attr(line, "to", minimum=1),
                from_col=_int_attr(line, "fromch", minimum=0),
                to_col=_int_attr(line, "toch", minimum=0),
            )
        )
    if not regions:
        raise EiOutParseError(f"<{elem.tag}> has an empty <lines> list")
    return tuple(regions)


def _parse_contents(
    elem: ET.Element, sink: list[str], allow_lines: bool = False
) -> tuple[Content, ...]:
    contents: list[Content] = []
    for child in elem:
        if child.tag == "content":
            contents.append(_parse_content(child, sink))
        elif child.tag == "lines" and allow_lines:
            continue
        else:
            sink.append(f"unknown element <{child.tag}> under <{elem.tag}>, skipped")
    return tuple(contents)


def _parse_content(elem: ET.Element, sink: list[str]) -> Content:
    fmt = elem.get("format", "text")
    if fmt not in CONTENT_FORMATS:
        sink.append(f"unknown content format {fmt!r}, treated as text")
        fmt = "text"
    execid = elem.get("execid")
    poll = None
    time_attr = elem.get("time")
    if execid is not None and time_attr is not None:
        m = _POLL_INTERVAL_RE.match(time_attr)
        if m:
            poll = int(m.group(1))
        else:
            sink.append(f"unparseable poll interval {time_attr!r}, using default")
            poll = DEFAULT_POLL_SECONDS
    elif execid is not None or time_attr is not None:
        # A stream hint needs both; half a hint is plain content.
        sink.append("content carries only one of execid/time, stream hint ignored")
        execid = None
    return Content(format=fmt, body=_inner_xml(elem), stream_execid=execid, poll_seconds=poll)


def _inner_xml(elem: ET.Element) -> str:
    """The body of a content element, preserving embedded markup verbatim."""
    parts = [elem.text or ""]
    for child in elem:
        parts.append(ET.tostring(child, encoding="unicode"))
    return "".join(parts)


def _parse_outclass(elem: ET.Element, sink: list[str]) -> str:
    value = elem.get("outclass", "info")
    if value not in OUTCLASSES:
        sink.append(f"unknown outclass {value!r} on <{elem.tag}>, treated as info")
        return "info"
    return value


def _require_attr(elem: ET.Element, name: str) -> str:
    value = elem.get(name)
    if value is None:
        raise EiOutParseError(f"<{elem.tag}> is missing required attribute {name!r}")
    return value


def _int_attr(
    elem: ET.Element, name: str, required: bool = False, minimum: int = 0
) -> int | None:
    raw = elem.get(name)
    if raw is None:
        if required:
            raise EiOutParseError(f"<{elem.tag}> is missing required attribute {name!r}")
        return None
    try:
        value = int(raw)
    except ValueError:
        raise EiOutParseError(f"<{elem.tag}> attribute {name!r} is not an integer: {raw!r}")
    if value < minimum:
        raise EiOutParseError(f"<{elem.tag}> attribute {name!r} must be >= {minimum}")
    return value


def _positive_int_attr(elem: ET.Element, name: str) -> int | None:
    return _int_attr(elem, name, minimum=1)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize(doc: EiOutDocument) -> str:
    """Emit XML that ``parse`` maps back to an equal document.

    Bodies and attributes are character-escaped so arbitrary html/svg/graphs
    payloads survive the round trip byte for byte.  Values that violate the
    grammar (bad outclass, non-bare download filename, text containing
    control characters XML cannot carry) raise :class:`EiOutBuildError`.
    """
    root = ET.Element("eiout")
    if doc.commands:
        commands = ET.SubElement(root, "eicommands")
        for cmd in doc.commands:
            commands.append(_command_element(cmd))
    if doc.actions:
        actions = ET.SubElement(root, "eiactions")
        for action in doc.actions:
            actions.append(_action_element(action))
    return ET.tostring(root, encoding="unicode")


def _command_element(cmd: EiCommand) -> ET.Element:
    if isinstance(cmd, PrintOnConsole):
        elem = ET.Element("printonconsole")
        if cmd.console_id is not None:
            elem.set("consoleid", _check_attr(cmd.console_id, "consoleid"))
        if cmd.console_title is not None:
            elem.set("consoletitle", _check_attr(cmd.console_title, "consoletitle"))
        for content in cmd.contents:
            elem.append(_content_element(content))
        return elem
    if isinstance(cmd, AddMarker):
        elem = ET.Element("addmarker", dest=_check_attr(cmd.dest, "dest"))
        elem.set("outclass", _check_outclass(cmd.outclass))
        elem.append(_lines_element(cmd.lines, "addmarker"))
        if cmd.content is not None:
            elem.append(_content_element(cmd.content))
        return elem
    if isinstance(cmd, HighlightLines):
        elem = ET.Element("highlightlines", dest=_check_attr(cmd.dest, "dest"))
        elem.set("outclass", _check_outclass(cmd.outclass))
        elem.append(_lines_element(cmd.regions, "highlightlines"))
        return elem
    if isinstance(cmd, DialogBox):
        elem = ET.Element("dialogbox", boxtitle=_check_attr(cmd.box_title, "boxtitle"))
        elem.set("outclass", _check_outclass(cmd.outclass))
        for name, value in (("boxwidth", cmd.box_width), ("boxheight", cmd.box_height)):
            if value is not None:
                if value < 1:
                    raise EiOutBuildError(f"{name} must be positive, got {value}")
                elem.set(name, str(value))
        for content in cmd.contents:
            elem.append(_content_element(content))
        return elem
    if isinstance(cmd, Download):
        if not _BARE_FILENAME_RE.match(cmd.filename) or cmd.filename in (".", ".."):
            raise EiOutBuildError(f"download filename {cmd.filename!r} is not a bare file name")
        return ET.Element(
            "download",
            execid=_check_attr(cmd.execid, "execid"),
            filename=cmd.filename,
        )
    raise EiOutBuildError(f"not an eiout command: {cmd!r}")


def _action_element(action: EiAction) -> ET.Element:
    if isinstance(action, OnCodeLineClick):
        elem = ET.Element("oncodelineclick", dest=_check_attr(action.dest, "dest"))
        elem.set("outclass", _check_outclass(action.outclass))
        elem.append(_lines_element(action.lines, "oncodelineclick"))
        elem.append(_nested_commands_element(action.commands))
        return elem
    if isinstance(action, OnClick):
        elem = ET.Element("onclick")
        if not action.selectors:
            raise EiOutBuildError("onclick action declares no selectors")
        elements = ET.SubElement(elem, "elements")
        for selector in action.selectors:
            stripped = selector.strip()
            if not stripped or any(ord(ch) < 0x20 for ch in stripped):
                raise EiOutBuildError(f"not a CSS-style selector: {selector!r}")
            ET.SubElement(elements, "selector", value=stripped)
        elem.append(_nested_commands_element(action.commands))
        return elem
    raise EiOutBuildError(f"not an eiout action: {action!r}")


def _nested_commands_element(commands: tuple[EiCommand, ...]) -> ET.Element:
    wrapper = ET.Element("eicommands")
    for cmd in commands:
        if isinstance(cmd, (OnCodeLineClick, OnClick)):
            raise EiOutBuildError("actions cannot nest inside an action's command list")
        wrapper.append(_command_element(cmd))
    return wrapper


def _lines_element(regions: tuple[LineRegion, ...], owner: str) -> ET.Element:
    if not regions:
        raise EiOutBuildError(f"{owner} needs at least one line region")
    lines = ET.Element("lines")
    for region in regions:
        if region.from_line < 1:
            raise EiOutBuildError(f"line numbers are 1-based, got {region.from_line}")
        if region.to_line is not None and region.to_line < region.from_line:
            raise EiOutBuildError(
                f"region ends before it starts: {region.from_line}..{region.to_line}"
            )
        line = ET.SubElement(lines, "line")
        line.set("from", str(region.from_line))
        if region.to_line is not None:
            line.set("to", str(region.to_line))
        if region.from_col is not None:
            if region.from_col < 0:
                raise EiOutBuildError("columns are 0-based, got a negative fromch")
            line.set("fromch", str(region.from_col))
        if region.to_col is not None:
            if region.to_col < 0:
                raise EiOutBuildError("columns are 0-based, got a negative toch")
            line.set("toch", str(region.to_col))
    return lines


def _content_element(content: Content) -> ET.Element:
    if content.format not in CONTENT_FORMATS:
        raise EiOutBuildError(f"unknown content format {content.format!r}")
    elem = ET.Element("content", format=content.format)
    if content.stream_execid is not None:
        poll = DEFAULT_POLL_SECONDS if content.poll_seconds is None else content.poll_seconds
        elem.set("execid", _check_attr(content.stream_execid, "execid"))
        elem.set("time", f"{poll}sec")
    _check_text(content.body)
    elem.text = content.body
    return elem


def _check_outclass(value: str) -> str:
    if value not in OUTCLASSES:
        raise EiOutBuildError(f"outclass must be one of {OUTCLASSES}, got {value!r}")
    return value


def _check_attr(value: str, name: str) -> str:
    for ch in value:
        if ord(ch) < 0x20 and ch not in "\t\n\r":
            raise EiOutBuildError(f"attribute {name!r} contains a control character")
    return value


def _check_text(value: str) -> None:
    # XML 1.0 cannot carry most C0 controls at all, and a bare CR would be
    # normalized to LF on re-parse, silently corrupting opaque bodies.
    for ch in value:
        if (ord(ch) < 0x20 and ch not in "\t\n") or ch == "\x7f":
            raise EiOutBuildError(f"text body contains unrepresentable character {ch!r}")


# ---------------------------------------------------------------------------
# Linting against an execution's context
# ---------------------------------------------------------------------------


def validate(
    doc: EiOutDocument,
    known_files: set[str] | frozenset[str] = frozenset(),
    known_execids: set[str] | frozenset[str] = frozenset(),
) -> list[Lint]:
    """Soft checks relating a document to the execution that produced it.

    Returns lints, never raises: a document that references files the
    client never sent, or executions the server does not know, still
    renders -- it just will not do anything useful.
    """
    lints: list[Lint] = []

    def check_regions(regions: tuple[LineRegion, ...], where: str) -> None:
        for region in regions:
            if region.to_line is not None and region.to_line < region.from_line:
                lints.append(
                    Lint("bad-region", f"{where}: region {region.from_line}..{region.to_line} ends before it starts")
                )

    def check_dest(dest: str, where: str) -> None:
        if known_files and dest not in known_files:
            lints.append(Lint("unknown-file", f"{where}: {dest!r} is not among the execution's input files"))

    def check_execid(execid: str, where: str) -> None:
        if known_execids and execid not in known_execids:
            lints.append(Lint("unknown-execid", f"{where}: execution {execid!r} is not known"))

    def check_contents(contents: tuple[Content, ...], where: str) -> None:
        for content in contents:
            if content.stream_execid is not None:
                check_execid(content.stream_execid, where)
                if content.poll_seconds == 0:
                    lints.append(Lint("bad-poll-interval", f"{where}: poll interval of 0 seconds"))

    def check_command(cmd: EiCommand, where: str) -> None:
        if isinstance(cmd, PrintOnConsole):
            check_contents(cmd.contents, where)
        elif isinstance(cmd, AddMarker):
            check_dest(cmd.dest, where)
            check_regions(cmd.lines, where)
            if cmd.content is not None:
                check_contents((cmd.content,), where)
        elif isinstance(cmd, HighlightLines):
            check_dest(cmd.dest, where)
            check_regions(cmd.regions, where)
        elif isinstance(cmd, DialogBox):
            check_contents(cmd.contents, where)
        elif isinstance(cmd, Download):
            check_execid(cmd.execid, where)

    for i, cmd in enumerate(doc.commands):
        check_command(cmd, f"command {i}")
    for i, action in enumerate(doc.actions):
        where = f"action {i}"
        if isinstance(action, OnCodeLineClick):
            check_dest(action.dest, where)
            check_regions(action.lines, where)
        for j, cmd in enumerate(action.commands):
            check_command(cmd, f"{where}, command {j}")
    return lints


# ---------------------------------------------------------------------------
# Plain-text projection (terminal client backend)
# ---------------------------------------------------------------------------


def render_text(doc: EiOutDocument) -> str:
    """Deterministic plain-text rendering of a document.

    Console prints come first, grouped by console (default console on top),
    then the remaining commands in document order, then one summary line
    per action.  Non-text bodies show as ``[html content]``-style
    placeholders; stream hints show as a bracketed note so terminal users
    know to follow the execution.
    """
    chunks: list[str] = []

    prints = [cmd for cmd in doc.commands if isinstance(cmd, PrintOnConsole)]
    consoles: dict[str | None, list[PrintOnConsole]] = {}
    for cmd in prints:
        consoles.setdefault(cmd.console_id, []).append(cmd)
    ordering: list[str | None] = []
    if None in consoles:
        ordering.append(None)
    ordering.extend(key for key in consoles if key is not None)
    for key in ordering:
        if key is not None:
            titles = [c.console_title for c in consoles[key] if c.console_title]
            header = f"[console {key}]"
            if titles:
                header += f" {titles[0]}"
            chunks.append(header)
        for cmd in consoles[key]:
            for content in cmd.contents:
                chunks.extend(_render_content(content))

    for cmd in doc.commands:
        if isinstance(cmd, PrintOnConsole):
            continue
        if isinstance(cmd, AddMarker):
            line = f"{cmd.dest}:{_render_regions(cmd.lines)} [{cmd.outclass.upper()}]"
            if cmd.content is not None:
                note = _one_line(cmd.content)
                if note:
                    line += f" {note}"
            chunks.append(line)
        elif isinstance(cmd, HighlightLines):
            chunks.append(f"{cmd.dest}:{_render_regions(cmd.regions)} [{cmd.outclass.upper()}]")
        elif isinstance(cmd, DialogBox):
            chunks.append(f"=== {cmd.box_title} ===")
            for content in cmd.contents:
                chunks.extend(_render_content(content))
        elif isinstance(cmd, Download):
            chunks.append(f"[download {cmd.filename} from execution {cmd.execid}]")

    for action in doc.actions:
        if isinstance(action, OnCodeLineClick):
            chunks.append(
                f"interactive action at {action.dest}:{_render_regions(action.lines)}"
                f" ({len(action.commands)} commands)"
            )
        else:
            chunks.append(
                f"interactive action on {', '.join(action.selectors)}"
                f" ({len(action.commands)} commands)"
            )

    return "\n".join(chunks)


def _render_content(content: Content) -> list[str]:
    lines: list[str] = []
    if content.format == "text":
        lines.append(content.body)
    else:
        lines.append(f"[{content.format} content]")
    hint = content.stream_hint
    if hint is not None:
        lines.append(f"[stream {hint[0]}: poll every {hint[1]}s]")
    return lines


def _render_regions(regions: tuple[LineRegion, ...]) -> str:
    return ",".join(region.span() for region in regions)


def _one_line(content: Content) -> str:
    if content.format != "text":
        return f"[{content.format} content]"
    return " ".join(content.body.split())
