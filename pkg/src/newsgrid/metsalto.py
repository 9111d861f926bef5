"""METS/ALTO serialization of segmented issues.

One ALTO 2.1 document per page carries the physical layout (text blocks and
text lines with pixel coordinates, empty CONTENT because recognition is an
external step). One METS 1.x wrapper per issue carries the logical structure:
a physical structMap over the pages and a logical structMap listing articles
in reading order, each pointing into the ALTO files through area references.

Serialization is deterministic: no timestamps, fixed id schemes, fixed
attribute order.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .geometry import Rect

ALTO_NS = "http://www.loc.gov/standards/alto/ns-v2#"
METS_NS = "http://www.loc.gov/METS/"
XLINK_NS = "http://www.w3.org/1999/xlink"

ALTO_VERSION = "2.1"
METS_VERSION = "1.12"


class DanglingReference(Exception):
    """A logical pointer has no physical target."""


@dataclass
class PageDocument:
    """Physical model of one page, ready for ALTO emission."""

    number: int  # 1-based
    width: int
    height: int
    blocks: list[tuple[int, Rect]]  # (box id, bbox)
    lines_by_block: dict[int, list[tuple[int, Rect]]]  # box id -> (line id, bbox)
    source_image: Optional[str] = None

    def block_xml_id(self, box_id: int) -> str:
        return f"P{self.number:04d}_TB{box_id:04d}"

    def line_xml_id(self, line_id: int) -> str:
        return f"P{self.number:04d}_TL{line_id:04d}"


@dataclass
class ArticleDivision:
    """Logical model of one article: ordered block references per page."""

    reading_index: int
    blocks: list[tuple[int, int]]  # (page number 1-based, box id)
    label: Optional[str] = None


@dataclass
class IssueDocument:
    issue_id: str
    pages: list[PageDocument]
    articles: list[ArticleDivision]
    date: Optional[str] = None  # ISO-8601


def alto_file_name(page_number: int) -> str:
    return f"p{page_number:04d}.xml"


def _fmt(v: float) -> str:
    return str(int(round(v)))


def emit_alto(page: PageDocument) -> bytes:
    """Serialize one page as ALTO. Ids are stable across runs."""
    ET.register_namespace("", ALTO_NS)
    alto = ET.Element(f"{{{ALTO_NS}}}alto")
    desc = ET.SubElement(alto, f"{{{ALTO_NS}}}Description")
    unit = ET.SubElement(desc, f"{{{ALTO_NS}}}MeasurementUnit")
    unit.text = "pixel"
    if page.source_image:
        src = ET.SubElement(desc, f"{{{ALTO_NS}}}sourceImageInformation")
        fn = ET.SubElement(src, f"{{{ALTO_NS}}}fileName")
        fn.text = page.source_image
    ocr = ET.SubElement(desc, f"{{{ALTO_NS}}}OCRProcessing", {"ID": "OCR_0"})
    step = ET.SubElement(ocr, f"{{{ALTO_NS}}}ocrProcessingStep")
    note = ET.SubElement(step, f"{{{ALTO_NS}}}processingStepDescription")
    note.text = "layout only; text recognition delegated to an external OCR engine"

    layout = ET.SubElement(alto, f"{{{ALTO_NS}}}Layout")
    page_el = ET.SubElement(
        layout,
        f"{{{ALTO_NS}}}Page",
        {
            "ID": f"P{page.number:04d}",
            "PHYSICAL_IMG_NR": str(page.number),
            "WIDTH": str(page.width),
            "HEIGHT": str(page.height),
        },
    )
    space = ET.SubElement(
        page_el,
        f"{{{ALTO_NS}}}PrintSpace",
        {"HPOS": "0", "VPOS": "0", "WIDTH": str(page.width), "HEIGHT": str(page.height)},
    )
    for box_id, bbox in page.blocks:
        tb = ET.SubElement(
            space,
            f"{{{ALTO_NS}}}TextBlock",
            {
                "ID": page.block_xml_id(box_id),
                "HPOS": _fmt(bbox.x0),
                "VPOS": _fmt(bbox.y0),
                "WIDTH": _fmt(bbox.width),
                "HEIGHT": _fmt(bbox.height),
            },
        )
        for line_id, lb in page.lines_by_block.get(box_id, []):
            tl = ET.SubElement(
                tb,
                f"{{{ALTO_NS}}}TextLine",
                {
                    "ID": page.line_xml_id(line_id),
                    "HPOS": _fmt(lb.x0),
                    "VPOS": _fmt(lb.y0),
                    "WIDTH": _fmt(lb.width),
                    "HEIGHT": _fmt(lb.height),
                },
            )
            ET.SubElement(
                tl,
                f"{{{ALTO_NS}}}String",
                {
                    "ID": page.line_xml_id(line_id) + "_S",
                    "CONTENT": "",
                    "HPOS": _fmt(lb.x0),
                    "VPOS": _fmt(lb.y0),
                    "WIDTH": _fmt(lb.width),
                    "HEIGHT": _fmt(lb.height),
                },
            )
    tree = ET.ElementTree(alto)
    ET.indent(tree, space="  ")
    return ET.tostring(alto, encoding="utf-8", xml_declaration=True) + b"\n"


def emit_mets(issue: IssueDocument) -> bytes:
    """Serialize the issue wrapper. Raises DanglingReference for any article
    block that does not resolve to an emitted ALTO text block."""
    known_blocks = {
        (page.number, box_id) for page in issue.pages for box_id, _b in page.blocks
    }
    for art in issue.articles:
        for page_no, box_id in art.blocks:
            if (page_no, box_id) not in known_blocks:
                raise DanglingReference(f"article {art.reading_index}: no block {box_id} on page {page_no}")

    ET.register_namespace("mets", METS_NS)
    ET.register_namespace("xlink", XLINK_NS)
    mets = ET.Element(f"{{{METS_NS}}}mets", {"OBJID": issue.issue_id, "LABEL": issue.issue_id})
    hdr = ET.SubElement(mets, f"{{{METS_NS}}}metsHdr")
    agent = ET.SubElement(hdr, f"{{{METS_NS}}}agent", {"ROLE": "CREATOR", "TYPE": "OTHER"})
    name = ET.SubElement(agent, f"{{{METS_NS}}}name")
    name.text = f"newsgrid (ALTO {ALTO_VERSION}, METS {METS_VERSION})"
    if issue.date:
        note = ET.SubElement(agent, f"{{{METS_NS}}}note")
        note.text = f"issue date {issue.date}"

    file_sec = ET.SubElement(mets, f"{{{METS_NS}}}fileSec")
    grp = ET.SubElement(file_sec, f"{{{METS_NS}}}fileGrp", {"USE": "alto"})
    for page in issue.pages:
        f = ET.SubElement(
            grp,
            f"{{{METS_NS}}}file",
            {"ID": f"FILE_ALTO_P{page.number:04d}", "MIMETYPE": "text/xml"},
        )
        ET.SubElement(
            f,
            f"{{{METS_NS}}}FLocat",
            {"LOCTYPE": "OTHER", f"{{{XLINK_NS}}}href": f"alto/{alto_file_name(page.number)}"},
        )

    phys = ET.SubElement(mets, f"{{{METS_NS}}}structMap", {"TYPE": "PHYSICAL"})
    phys_issue = ET.SubElement(
        phys, f"{{{METS_NS}}}div", {"ID": "PHYS_ISSUE", "TYPE": "issue"}
    )
    for page in issue.pages:
        div = ET.SubElement(
            phys_issue,
            f"{{{METS_NS}}}div",
            {"ID": f"PHYS_P{page.number:04d}", "TYPE": "page", "ORDER": str(page.number)},
        )
        ET.SubElement(div, f"{{{METS_NS}}}fptr", {"FILEID": f"FILE_ALTO_P{page.number:04d}"})

    logical = ET.SubElement(mets, f"{{{METS_NS}}}structMap", {"TYPE": "LOGICAL"})
    log_issue = ET.SubElement(
        logical,
        f"{{{METS_NS}}}div",
        {"ID": "LOG_ISSUE", "TYPE": "issue", "LABEL": issue.issue_id},
    )
    page_by_no = {p.number: p for p in issue.pages}
    for art in sorted(issue.articles, key=lambda a: a.reading_index):
        attrs = {
            "ID": f"ART_{art.reading_index + 1:04d}",
            "TYPE": "article",
            "ORDER": str(art.reading_index + 1),
        }
        if art.label:
            attrs["LABEL"] = art.label
        div = ET.SubElement(log_issue, f"{{{METS_NS}}}div", attrs)
        fptr = ET.SubElement(div, f"{{{METS_NS}}}fptr")
        par = ET.SubElement(fptr, f"{{{METS_NS}}}par")
        for page_no, box_id in art.blocks:
            ET.SubElement(
                par,
                f"{{{METS_NS}}}area",
                {
                    "FILEID": f"FILE_ALTO_P{page_no:04d}",
                    "BEGIN": page_by_no[page_no].block_xml_id(box_id),
                    "BETYPE": "IDREF",
                },
            )
    tree = ET.ElementTree(mets)
    ET.indent(tree, space="  ")
    return ET.tostring(mets, encoding="utf-8", xml_declaration=True) + b"\n"


def write_issue(issue: IssueDocument, out_dir: Path) -> dict[str, Path]:
    """Write {issue}/mets.xml and {issue}/alto/p{NNNN}.xml atomically."""
    issue_dir = Path(out_dir) / issue.issue_id
    alto_dir = issue_dir / "alto"
    alto_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for page in issue.pages:
        path = alto_dir / alto_file_name(page.number)
        _atomic_write(path, emit_alto(page))
        written[f"alto:{page.number}"] = path
    mets_path = issue_dir / "mets.xml"
    _atomic_write(mets_path, emit_mets(issue))
    written["mets"] = mets_path
    return written


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


# ---------------------------------------------------------------------------
# Reading back and validation
# ---------------------------------------------------------------------------

@dataclass
class LoadedArticle:
    order: int
    blocks: list[tuple[int, Rect]]  # (page number, block bbox)
    block_ids: list[tuple[str, str]] = field(default_factory=list)  # (fileid, begin)


def load_issue_articles(mets_path: Path) -> list[LoadedArticle]:
    """Parse an emitted issue back into article block regions (the eval path)."""
    mets_path = Path(mets_path)
    root = ET.parse(mets_path).getroot()
    file_hrefs = {}
    for f in root.iter(f"{{{METS_NS}}}file"):
        locat = f.find(f"{{{METS_NS}}}FLocat")
        file_hrefs[f.get("ID")] = locat.get(f"{{{XLINK_NS}}}href")

    blocks_by_file: dict[str, dict[str, tuple[int, Rect]]] = {}
    for file_id, href in file_hrefs.items():
        alto_path = mets_path.parent / href
        page_root = ET.parse(alto_path).getroot()
        page_el = page_root.find(f"{{{ALTO_NS}}}Layout/{{{ALTO_NS}}}Page")
        page_no = int(page_el.get("PHYSICAL_IMG_NR"))
        table = {}
        for tb in page_root.iter(f"{{{ALTO_NS}}}TextBlock"):
            x0 = float(tb.get("HPOS"))
            y0 = float(tb.get("VPOS"))
            table[tb.get("ID")] = (
                page_no,
                Rect(x0, y0, x0 + float(tb.get("WIDTH")), y0 + float(tb.get("HEIGHT"))),
            )
        blocks_by_file[file_id] = table

    articles = []
    logical = _structmap(root, "LOGICAL")
    for div in logical.iter(f"{{{METS_NS}}}div"):
        if div.get("TYPE") != "article":
            continue
        order = int(div.get("ORDER"))
        blocks = []
        block_ids = []
        for area in div.iter(f"{{{METS_NS}}}area"):
            file_id = area.get("FILEID")
            begin = area.get("BEGIN")
            if file_id not in blocks_by_file or begin not in blocks_by_file[file_id]:
                raise DanglingReference(f"area {begin} in {file_id} has no target")
            blocks.append(blocks_by_file[file_id][begin])
            block_ids.append((file_id, begin))
        articles.append(LoadedArticle(order, blocks, block_ids))
    articles.sort(key=lambda a: a.order)
    return articles


def _structmap(root, map_type: str):
    for sm in root.iter(f"{{{METS_NS}}}structMap"):
        if sm.get("TYPE") == map_type:
            return sm
    raise DanglingReference(f"no {map_type} structMap")


def validate_issue_dir(issue_dir: Path) -> list[str]:
    """Structural conformance and referential integrity of an emitted issue.

    Covers the element vocabulary this emitter targets: required attributes,
    id uniqueness, file pointer resolution, area targets, contiguous logical
    ORDER values, and block-coordinate sanity. Returns a list of problems
    (empty means valid).
    """
    problems: list[str] = []
    issue_dir = Path(issue_dir)
    mets_path = issue_dir / "mets.xml"
    if not mets_path.exists():
        return [f"missing {mets_path}"]
    root = ET.parse(mets_path).getroot()
    if root.tag != f"{{{METS_NS}}}mets":
        problems.append(f"root element {root.tag} is not mets")

    file_ids = set()
    for f in root.iter(f"{{{METS_NS}}}file"):
        fid = f.get("ID")
        if fid is None:
            problems.append("file element without ID")
            continue
        if fid in file_ids:
            problems.append(f"duplicate file ID {fid}")
        file_ids.add(fid)
        locat = f.find(f"{{{METS_NS}}}FLocat")
        href = locat.get(f"{{{XLINK_NS}}}href") if locat is not None else None
        if href is None:
            problems.append(f"file {fid} has no FLocat href")
        elif not (issue_dir / href).exists():
            problems.append(f"file {fid} href {href} does not exist")

    block_ids_by_file: dict[str, set[str]] = {}
    block_owner_count: dict[tuple[str, str], int] = {}
    for f in root.iter(f"{{{METS_NS}}}file"):
        fid = f.get("ID")
        locat = f.find(f"{{{METS_NS}}}FLocat")
        href = locat.get(f"{{{XLINK_NS}}}href") if locat is not None else None
        if href is None or not (issue_dir / href).exists():
            continue
        page_root = ET.parse(issue_dir / href).getroot()
        if page_root.tag != f"{{{ALTO_NS}}}alto":
            problems.append(f"{href}: root element is not alto")
            continue
        if page_root.find(f"{{{ALTO_NS}}}Description/{{{ALTO_NS}}}MeasurementUnit") is None:
            problems.append(f"{href}: missing MeasurementUnit")
        page_el = page_root.find(f"{{{ALTO_NS}}}Layout/{{{ALTO_NS}}}Page")
        if page_el is None:
            problems.append(f"{href}: missing Layout/Page")
            continue
        seen_ids: set[str] = set()
        pw, ph = float(page_el.get("WIDTH", 0)), float(page_el.get("HEIGHT", 0))
        if pw <= 0 or ph <= 0:
            problems.append(f"{href}: page has non-positive dimensions")
        for el in page_root.iter():
            elid = el.get("ID")
            if elid is not None:
                if elid in seen_ids:
                    problems.append(f"{href}: duplicate ID {elid}")
                seen_ids.add(elid)
        blocks = set()
        for tb in page_root.iter(f"{{{ALTO_NS}}}TextBlock"):
            for attr in ("ID", "HPOS", "VPOS", "WIDTH", "HEIGHT"):
                if tb.get(attr) is None:
                    problems.append(f"{href}: TextBlock missing {attr}")
            bid = tb.get("ID")
            if bid:
                blocks.add(bid)
                block_owner_count[(fid, bid)] = 0
            x0, y0 = float(tb.get("HPOS", 0)), float(tb.get("VPOS", 0))
            bw, bh = float(tb.get("WIDTH", 0)), float(tb.get("HEIGHT", 0))
            if x0 < 0 or y0 < 0 or x0 + bw > pw + 1 or y0 + bh > ph + 1:
                problems.append(f"{href}: block {bid} exceeds page bounds")
            for tl in tb.iter(f"{{{ALTO_NS}}}TextLine"):
                for attr in ("ID", "HPOS", "VPOS", "WIDTH", "HEIGHT"):
                    if tl.get(attr) is None:
                        problems.append(f"{href}: TextLine missing {attr}")
        block_ids_by_file[fid] = blocks

    try:
        logical = _structmap(root, "LOGICAL")
        _structmap(root, "PHYSICAL")
    except DanglingReference as exc:
        problems.append(str(exc))
        return problems

    orders = []
    for div in logical.iter(f"{{{METS_NS}}}div"):
        if div.get("TYPE") != "article":
            continue
        orders.append(int(div.get("ORDER", -1)))
        for area in div.iter(f"{{{METS_NS}}}area"):
            fid, begin = area.get("FILEID"), area.get("BEGIN")
            if fid not in file_ids:
                problems.append(f"area references unknown file {fid}")
            elif begin not in block_ids_by_file.get(fid, set()):
                problems.append(f"area target {begin} missing from {fid}")
            else:
                block_owner_count[(fid, begin)] += 1
    if orders != list(range(1, len(orders) + 1)):
        problems.append(f"logical ORDER values not contiguous from 1: {orders}")
    for (fid, bid), count in sorted(block_owner_count.items()):
        if count == 0:
            problems.append(f"orphan block {bid} in {fid}: no article references it")
        elif count > 1:
            problems.append(f"block {bid} in {fid} referenced by {count} articles")
    return problems
