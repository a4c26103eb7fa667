"""SPARQL endpoint access: the two related-term query templates, a pluggable
transport, retry with backoff, and an on-disk response cache keyed by query
text so dataset builds are reproducible offline."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
import urllib.parse
from typing import Callable, Optional

from .errors import EndpointError
from .labels import LabelKind

logger = logging.getLogger(__name__)

HYPERNYM_PROPERTY = "http://purl.org/linguistics/gold/hypernym"
RESOURCE_PREFIX = "http://dbpedia.org/resource/"

FORWARD_QUERY = (
    "SELECT * WHERE\n"
    "{{<{resource_prefix}{concept}>\n"
    "<{property}> \n"
    "?hypernyms}}"
)

INVERSE_QUERY = (
    "SELECT * WHERE {{?hypernyms \n"
    "<{property}>\n"
    "<{resource_prefix}{concept}>}}"
)

#: transport: (endpoint_url, query_text) -> SPARQL JSON result dict
Transport = Callable[[str, str], dict]


def resource_name(concept: str) -> str:
    """Endpoint resource naming: spaces to underscores, leading capital,
    percent-encoding for the rest."""
    name = concept.strip().replace(" ", "_")
    if name:
        name = name[0].upper() + name[1:]
    return urllib.parse.quote(name, safe="_()',.-")


def label_from_uri(value: str) -> str:
    """Strip a resource URI down to a plain label (underscores to spaces)."""
    if value.startswith(RESOURCE_PREFIX):
        value = value[len(RESOURCE_PREFIX):]
    elif "://" in value:
        value = value.rsplit("/", 1)[-1]
    return urllib.parse.unquote(value).replace("_", " ").strip()


def query_cache_key(query: str) -> str:
    return hashlib.sha256(query.encode("utf-8")).hexdigest()


def http_transport(session=None, rate_limit_per_sec: float = 0.0) -> Transport:
    """Standard SPARQL query wire protocol over HTTP GET."""
    import requests

    sess = session or requests.Session()
    state = {"last": 0.0}

    def transport(endpoint_url: str, query: str) -> dict:
        if rate_limit_per_sec > 0:
            wait = state["last"] + 1.0 / rate_limit_per_sec - time.monotonic()
            if wait > 0:
                time.sleep(wait)
        state["last"] = time.monotonic()
        response = sess.get(
            endpoint_url,
            params={"query": query, "format": "application/sparql-results+json"},
            headers={"Accept": "application/sparql-results+json"},
            timeout=30,
        )
        response.raise_for_status()
        return response.json()

    return transport


def file_transport(directory: str) -> Transport:
    """Serves canned responses from ``<dir>/<sha256(query)>.json``.

    Queries without a canned file resolve to an empty result set, mirroring
    a concept with no endpoint entry.
    """

    def transport(endpoint_url: str, query: str) -> dict:
        path = os.path.join(directory, query_cache_key(query) + ".json")
        if not os.path.exists(path):
            return {"results": {"bindings": []}}
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    return transport


def transport_for(endpoint_url: str) -> Transport:
    """file:// endpoints serve canned fixtures; http(s) goes over the wire."""
    if endpoint_url.startswith("file://"):
        return file_transport(endpoint_url[len("file://"):])
    return http_transport()


class SparqlClient:
    def __init__(
        self,
        endpoint_url: str,
        transport: Optional[Transport] = None,
        cache_dir: Optional[str] = None,
        max_retries: int = 3,
        backoff: float = 0.2,
    ):
        self.endpoint_url = endpoint_url
        self.transport = transport or transport_for(endpoint_url)
        self.cache_dir = cache_dir
        self.max_retries = max_retries
        self.backoff = backoff

    def _cache_path(self, query: str) -> Optional[str]:
        if not self.cache_dir:
            return None
        return os.path.join(self.cache_dir, query_cache_key(query) + ".json")

    def query(self, query: str) -> list[dict]:
        """Run a query (through the cache) and return its bindings."""
        cache_path = self._cache_path(query)
        if cache_path and os.path.exists(cache_path):
            with open(cache_path, encoding="utf-8") as fh:
                payload = json.load(fh)
        else:
            payload = self._fetch(query)
            if cache_path:
                os.makedirs(self.cache_dir, exist_ok=True)
                with open(cache_path, "w", encoding="utf-8") as fh:
                    json.dump(payload, fh, sort_keys=True)
        bindings = payload.get("results", {}).get("bindings", [])
        return [
            {var: cell.get("value", "") for var, cell in row.items()}
            for row in bindings
        ]

    def _fetch(self, query: str) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                return self.transport(self.endpoint_url, query)
            except Exception as exc:
                last_error = exc
                delay = self.backoff * (2**attempt)
                logger.warning(
                    "endpoint attempt %d/%d failed (%s); retrying in %.2fs",
                    attempt + 1,
                    self.max_retries,
                    exc,
                    delay,
                )
                time.sleep(delay)
        raise EndpointError(f"endpoint failed after {self.max_retries} attempts: {last_error}")

    def fetch_related_terms(self, concept: str) -> list[tuple[str, LabelKind]]:
        """Hypernyms from the forward query, hyponyms from the inverse one.

        Results are deduplicated and resource URIs stripped to labels. A
        concept with no endpoint entry yields an empty list.
        """
        name = resource_name(concept)
        forward = FORWARD_QUERY.format(
            resource_prefix=RESOURCE_PREFIX, property=HYPERNYM_PROPERTY, concept=name
        )
        inverse = INVERSE_QUERY.format(
            resource_prefix=RESOURCE_PREFIX, property=HYPERNYM_PROPERTY, concept=name
        )
        results: list[tuple[str, LabelKind]] = []
        seen: set[tuple[str, LabelKind]] = set()
        for query, kind in ((forward, LabelKind.HYPERNYM), (inverse, LabelKind.HYPONYM)):
            for row in self.query(query):
                value = row.get("hypernyms", "")
                if not value:
                    continue
                term = label_from_uri(value)
                entry = (term, kind)
                if term and entry not in seen:
                    seen.add(entry)
                    results.append(entry)
        return results
