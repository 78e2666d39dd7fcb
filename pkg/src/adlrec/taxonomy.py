"""ADL label set and the raw-object-label -> functional-category mapping.

The seven activity labels and the 29-category object table are configuration:
the label set is fixed, the category table is loaded from a JSON document and
is fully user-replaceable. The shipped default table is a reconstruction built
from published exemplar category names, padded to 29 entries with clearly
marked placeholders.
"""

import hashlib
import json
from dataclasses import dataclass
from importlib import resources


class TaxonomyError(ValueError):
    """Raised for malformed category-table documents or unknown ADL names."""


ADL_NAMES: tuple[str, ...] = (
    "Self-Feeding",
    "Functional Mobility",
    "Grooming & Health Management",
    "Communication Management",
    "Home Management",
    "Meal Preparation and Cleanup",
    "Leisure & Other Activities",
)

# Instance counts of the source corpus, in canonical ADL order.
PAPER_CLASS_COUNTS: tuple[int, ...] = (257, 207, 172, 428, 407, 625, 165)


@dataclass(frozen=True)
class AdlLabel:
    """One activity class: a dense stable index plus its canonical name."""

    id: int
    name: str


ADL_LABELS: tuple[AdlLabel, ...] = tuple(
    AdlLabel(i, name) for i, name in enumerate(ADL_NAMES)
)

NUM_ADL_CLASSES = len(ADL_LABELS)

_ADL_BY_NAME = {label.name: label for label in ADL_LABELS}


def adl_by_name(name: str) -> AdlLabel:
    """Resolve an ADL name against the closed canonical set."""
    try:
        return _ADL_BY_NAME[name]
    except KeyError:
        raise TaxonomyError(f"unknown ADL name: {name!r}") from None


@dataclass(frozen=True)
class ClassCounts:
    """Per-ADL nonnegative instance counts, canonical order."""

    counts: tuple[int, ...]

    def total(self) -> int:
        return sum(self.counts)

    def count(self, adl_name: str) -> int:
        return self.counts[adl_by_name(adl_name).id]


def paper_class_counts() -> ClassCounts:
    """The source-corpus class mix fixture (sums to 2261)."""
    return ClassCounts(PAPER_CLASS_COUNTS)


@dataclass(frozen=True)
class CategoryTable:
    """Ordered functional-category list plus the raw-label routing map.

    Category order is the order of appearance in the config document and
    fixes the feature dimension layout; `content_hash` versions that layout.
    Raw labels route through `raw_map`, then by identity if the raw string
    is itself a category name, then to `fallback`.
    """

    categories: tuple[str, ...]
    raw_map: dict[str, str]
    fallback: str
    content_hash: str
    placeholders: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {name: i for i, name in enumerate(self.categories)}
        )

    def __len__(self) -> int:
        return len(self.categories)

    def index_of(self, category: str) -> int:
        try:
            return self._index[category]
        except KeyError:
            raise TaxonomyError(f"unknown category: {category!r}") from None

    def map_label(self, raw: str) -> int:
        """Map a raw detector label to a category index. Total by design."""
        category = self.raw_map.get(raw)
        if category is None:
            category = raw if raw in self._index else self.fallback
        return self._index[category]


def map_label(table: CategoryTable, raw: str) -> int:
    return table.map_label(raw)


def _table_hash(fallback: str, categories: dict[str, list[str]]) -> str:
    canonical = json.dumps(
        {
            "fallback": fallback,
            "categories": [[name, sorted(raws)] for name, raws in categories.items()],
        },
        separators=(",", ":"),
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise TaxonomyError(f"duplicate category: {key!r}")
        seen[key] = value
    return seen


def load_category_table(config_text: str) -> CategoryTable:
    """Parse a category-table document.

    Expected shape::

        {"fallback": "other",
         "placeholders": ["..."],          # optional, informational
         "categories": {"<category>": ["raw_label", ...], ...}}

    Raises TaxonomyError with line/field context on parse failure,
    duplicate categories, duplicate raw labels, or an empty table.
    """
    try:
        doc = json.loads(config_text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise TaxonomyError(
            f"category table parse failure at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise TaxonomyError("category table document must be an object")
    categories = doc.get("categories")
    if not isinstance(categories, dict) or not categories:
        raise TaxonomyError("field 'categories': must be a nonempty object")
    for name, raws in categories.items():
        if not isinstance(name, str) or not name:
            raise TaxonomyError(f"field 'categories': bad category name {name!r}")
        if not isinstance(raws, list) or not all(isinstance(r, str) for r in raws):
            raise TaxonomyError(
                f"field 'categories.{name}': raw labels must be a list of strings"
            )
    fallback = doc.get("fallback", "other")
    if fallback not in categories:
        raise TaxonomyError(f"field 'fallback': {fallback!r} is not a listed category")
    placeholders = tuple(doc.get("placeholders", ()))
    for name in placeholders:
        if name not in categories:
            raise TaxonomyError(f"field 'placeholders': {name!r} is not a listed category")

    raw_map: dict[str, str] = {}
    for name, raws in categories.items():
        for raw in raws:
            if raw in raw_map and raw_map[raw] != name:
                raise TaxonomyError(
                    f"field 'categories.{name}': raw label {raw!r} already maps to "
                    f"{raw_map[raw]!r}"
                )
            raw_map[raw] = name

    return CategoryTable(
        categories=tuple(categories),
        raw_map=raw_map,
        fallback=fallback,
        content_hash=_table_hash(fallback, categories),
        placeholders=placeholders,
    )


def default_category_table_text() -> str:
    """The packaged default table document (29 reconstructed categories)."""
    return resources.files("adlrec.data").joinpath("categories.json").read_text("utf-8")


def default_category_table() -> CategoryTable:
    return load_category_table(default_category_table_text())
