"""AudioSet-style sound-class ontology: parsing, hierarchy queries, and
keyword-caption synthesis from multi-label annotations.

The ontology document is a JSON list of records with "id", "name" and
"child_ids" keys. An "abstract" boolean or a "restrictions" list (the
published AudioSet format) marks classes that never appear as labels.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from capkit.errors import DataError


class OntologyError(DataError):
    """Malformed ontology document or invalid hierarchy query."""


BUNDLED_EXCERPT = "audioset_ontology_excerpt.json"

_COMMA_IN_NAME = re.compile(r"\s*,\s*")


@dataclass(frozen=True)
class OntologyNode:
    id: str
    name: str
    child_ids: tuple[str, ...]
    is_abstract: bool = False


class Ontology:
    """Immutable DAG of sound classes.

    Node order follows the source document, and derived parent lists keep
    that order, so every query is deterministic for a given file.
    """

    def __init__(self, nodes):
        self.nodes: dict[str, OntologyNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise OntologyError(f"duplicate ontology id: {node.id}")
            self.nodes[node.id] = node
        parents: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            for child in node.child_ids:
                if child not in self.nodes:
                    raise OntologyError(
                        f"node {node.id} references unknown child {child}"
                    )
                parents[child].append(node.id)
        self.parent_index: dict[str, tuple[str, ...]] = {
            nid: tuple(ps) for nid, ps in parents.items()
        }
        self._check_acyclic()

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    def _check_acyclic(self) -> None:
        # iterative three-color DFS over child edges
        WHITE, GRAY, BLACK = 0, 1, 2
        color = dict.fromkeys(self.nodes, WHITE)
        for start in self.nodes:
            if color[start] != WHITE:
                continue
            stack = [(start, iter(self.nodes[start].child_ids))]
            color[start] = GRAY
            while stack:
                nid, children = stack[-1]
                advanced = False
                for child in children:
                    if color[child] == GRAY:
                        raise OntologyError(f"cycle detected through {child}")
                    if color[child] == WHITE:
                        color[child] = GRAY
                        stack.append((child, iter(self.nodes[child].child_ids)))
                        advanced = True
                        break
                if not advanced:
                    color[nid] = BLACK
                    stack.pop()

    def node(self, node_id: str) -> OntologyNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise OntologyError(f"unknown ontology id: {node_id}") from None

    def direct_parents(self, node_id: str) -> tuple[str, ...]:
        """All nodes whose child_ids contain `node_id`, in source order."""
        if node_id not in self.nodes:
            raise OntologyError(f"unknown ontology id: {node_id}")
        return self.parent_index[node_id]

    def roots(self) -> tuple[str, ...]:
        return tuple(nid for nid, ps in self.parent_index.items() if not ps)

    def descendants(self, root_ids, include_roots: bool = True) -> set[str]:
        """Descendant closure of `root_ids` following child edges."""
        closure: set[str] = set()
        stack = []
        for rid in root_ids:
            if rid not in self.nodes:
                raise OntologyError(f"unknown ontology id: {rid}")
            if include_roots:
                closure.add(rid)
            stack.append(rid)
        while stack:
            nid = stack.pop()
            for child in self.nodes[nid].child_ids:
                if child not in closure:
                    closure.add(child)
                    stack.append(child)
        return closure


def _parse_record(i, rec) -> OntologyNode:
    if not isinstance(rec, dict):
        raise OntologyError(f"record {i} is not an object")
    try:
        node_id = rec["id"]
        name = rec["name"]
        child_ids = rec["child_ids"]
    except KeyError as exc:
        raise OntologyError(f"record {i} missing key {exc}") from None
    if not isinstance(node_id, str) or not isinstance(name, str):
        raise OntologyError(f"record {i}: id and name must be strings")
    if not isinstance(child_ids, list) or not all(
        isinstance(c, str) for c in child_ids
    ):
        raise OntologyError(f"record {i}: child_ids must be a list of ids")
    abstract = bool(rec.get("abstract", False)) or (
        "abstract" in rec.get("restrictions", [])
    )
    return OntologyNode(node_id, name, tuple(child_ids), abstract)


def load_ontology(data: bytes | str) -> Ontology:
    """Parse a serialized ontology document and build the parent index."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"ontology document is not valid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise OntologyError("ontology document must be a list of records")
    return Ontology(_parse_record(i, rec) for i, rec in enumerate(doc))


def load_ontology_file(path) -> Ontology:
    with open(path, "rb") as fh:
        return load_ontology(fh.read())


def load_bundled_excerpt() -> Ontology:
    """Load the AudioSet ontology excerpt shipped with the package."""
    data = resources.files("capkit.data").joinpath(BUNDLED_EXCERPT).read_bytes()
    return load_ontology(data)


def normalize_name(name: str) -> str:
    """Lowercase a class name and turn embedded commas into ' - '."""
    return _COMMA_IN_NAME.sub(" - ", name).lower()


def synth_caption(ontology: Ontology, label_ids) -> str:
    """Build a keyword caption from an ordered list of class labels.

    Each label is prepended with its direct parent classes (source-file
    order), duplicates are dropped keeping the first occurrence, ids are
    mapped to lowercased names, and entries are joined with ", ".
    Commas inside a class name become " - " so the separator stays
    unambiguous.
    """
    ordered: list[str] = []
    seen: set[str] = set()
    for label in label_ids:
        if label not in ontology.nodes:
            raise OntologyError(f"unknown label id: {label}")
        for nid in (*ontology.direct_parents(label), label):
            if nid not in seen:
                seen.add(nid)
                ordered.append(nid)
    return ", ".join(normalize_name(ontology.nodes[nid].name) for nid in ordered)
