import math

import pytest

from ontoenrich.corpus import (
    ArticleDoc,
    build_corpus,
    doc_similarity,
    extract_articles,
    load_corpus,
    save_corpus,
    strip_markup,
)
from ontoenrich.embeddings import BowCosineProvider
from ontoenrich.errors import CorpusError


def page_xml(title, text, redirect=False, ns=0):
    redirect_tag = '<redirect title="elsewhere" />' if redirect else ""
    return (
        f"<page><title>{title}</title><ns>{ns}</ns>{redirect_tag}"
        f"<revision><text>{text}</text></revision></page>"
    )


def dump_xml(*pages):
    return "<mediawiki>" + "".join(pages) + "</mediawiki>"


def write_dump(tmp_path, content, name="dump.xml"):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return str(path)


class TestExtractArticles:
    def test_five_articles_one_redirect(self, tmp_path):
        pages = [page_xml(f"Article {i}", f"Body text {i}.") for i in range(4)]
        pages.append(page_xml("Old name", "#REDIRECT [[Article 0]]", redirect=True))
        dump = write_dump(tmp_path, dump_xml(*pages))
        articles = list(extract_articles(dump))
        assert len(articles) == 4
        assert [a.title for a in articles] == [f"Article {i}" for i in range(4)]

    def test_hash_redirect_text_skipped(self, tmp_path):
        dump = write_dump(
            tmp_path, dump_xml(page_xml("Alias", "#REDIRECT [[Real article]]"))
        )
        assert list(extract_articles(dump)) == []

    def test_empty_dump(self, tmp_path):
        dump = write_dump(tmp_path, dump_xml())
        assert list(extract_articles(dump)) == []

    def test_markup_only_article_has_empty_text(self, tmp_path):
        dump = write_dump(
            tmp_path, dump_xml(page_xml("Templates", "{{infobox|a=1}}{{stub}}"))
        )
        articles = list(extract_articles(dump))
        assert len(articles) == 1
        assert articles[0].text == ""

    def test_non_article_namespace_skipped(self, tmp_path):
        dump = write_dump(
            tmp_path, dump_xml(page_xml("Talk:Something", "chatter", ns=1))
        )
        assert list(extract_articles(dump)) == []

    def test_truncated_dump_emits_complete_articles(self, tmp_path, caplog):
        content = dump_xml(page_xml("Whole", "Complete body."))
        truncated = content.replace("</mediawiki>", "<page><title>Half</title><ns>0")
        dump = write_dump(tmp_path, truncated)
        with caplog.at_level("WARNING"):
            articles = list(extract_articles(dump))
        assert [a.title for a in articles] == ["Whole"]
        assert "truncated" in caplog.text

    def test_bz2_dump(self, tmp_path):
        import bz2

        path = tmp_path / "dump.xml.bz2"
        with bz2.open(path, "wt", encoding="utf-8") as fh:
            fh.write(dump_xml(page_xml("Compressed", "Zipped body.")))
        articles = list(extract_articles(str(path)))
        assert articles[0].title == "Compressed"


class TestStripMarkup:
    def test_links_and_emphasis(self):
        raw = "'''Security''' is [[Information security|protection]] of [[data]]."
        assert strip_markup(raw) == "Security is protection of data."

    def test_nested_templates_and_tables_dropped(self):
        raw = "Before {{outer {{inner}} rest}} after.\n{| class=x\n|row\n|}\nEnd."
        text = strip_markup(raw)
        assert "inner" not in text
        assert "row" not in text
        assert "Before" in text and "after." in text and "End." in text

    def test_refs_and_headings(self):
        raw = "== History ==\nBody<ref name=a>cite</ref> continues.<ref group=b/>"
        text = strip_markup(raw)
        assert "cite" not in text
        assert "History" in text
        assert "Body continues." in text.replace("\n", " ")

    def test_external_links(self):
        raw = "See [https://example.org the site] or [https://example.org/raw]."
        assert strip_markup(raw) == "See the site or ."


class TestDocSimilarity:
    def test_self_similarity_is_one(self):
        doc = ArticleDoc(title="A", text="alpha beta gamma alpha")
        score = doc_similarity(doc, doc, BowCosineProvider())
        assert score == pytest.approx(1.0, abs=1e-6)

    def test_disjoint_vocabulary_is_zero(self):
        a = ArticleDoc(title="A", text="alpha beta gamma")
        b = ArticleDoc(title="B", text="delta epsilon zeta")
        assert doc_similarity(a, b, BowCosineProvider()) == 0.0

    def test_hand_computed_cosine(self):
        # counts: a = {x:2, y:1}, b = {x:1, y:1}; cos = 3 / (sqrt(5) sqrt(2))
        a = ArticleDoc(title="A", text="x x y")
        b = ArticleDoc(title="B", text="x y")
        expected = 3 / (math.sqrt(5) * math.sqrt(2))
        assert doc_similarity(a, b, BowCosineProvider()) == pytest.approx(expected)

    def test_empty_text_scores_zero_with_warning(self, caplog):
        a = ArticleDoc(title="A", text="")
        b = ArticleDoc(title="B", text="words")
        with caplog.at_level("WARNING"):
            assert doc_similarity(a, b, BowCosineProvider()) == 0.0
        assert "empty" in caplog.text


class ConstantProvider:
    def __init__(self, scores):
        self.scores = scores

    def similarity(self, anchor_text, article_text):
        return self.scores.get(article_text, 0.0)


class TestBuildCorpus:
    def make_dump(self, tmp_path):
        pages = [page_xml("Information security", "anchor body about security.")]
        # three term-matched articles (one scored low on purpose)
        pages.append(page_xml("Firewall", "term article one."))
        pages.append(page_xml("Intrusion detection", "term article two."))
        pages.append(page_xml("Access_control", "term article three."))
        # six other articles; two will pass the threshold
        for i, body in enumerate(
            ["rel a.", "rel b.", "far c.", "far d.", "far e.", "far f."]
        ):
            pages.append(page_xml(f"Other {i}", body))
        return write_dump(tmp_path, dump_xml(*pages))

    def make_provider(self):
        return ConstantProvider(
            {
                "anchor body about security.": 1.0,
                "rel a.": 0.5,
                "rel b.": 0.27,   # exactly at threshold: included
                "far c.": 0.1,
                "far d.": 0.05,
                "far e.": 0.0,
                "far f.": 0.2,
                "term article one.": 0.01,
                "term article two.": 0.01,
                "term article three.": 0.01,
            }
        )

    def test_fixture_arithmetic(self, tmp_path):
        dump = self.make_dump(tmp_path)
        corpus = build_corpus(
            dump,
            {"firewall", "intrusion detection", "access control"},
            "Information security",
            0.27,
            self.make_provider(),
        )
        # 3 forced + anchor (1.0) + rel a (0.5) + rel b (0.27 boundary)
        assert len(corpus.articles) == 6
        forced = [t for t, e in corpus.manifest.items() if e.reason == "forced"]
        assert sorted(forced) == ["Access_control", "Firewall", "Intrusion detection"]

    def test_low_scoring_term_article_is_forced(self, tmp_path):
        dump = self.make_dump(tmp_path)
        corpus = build_corpus(
            dump, {"firewall"}, "Information security", 0.27, self.make_provider()
        )
        assert corpus.manifest["Firewall"].reason == "forced"
        assert corpus.manifest["Firewall"].score is None

    def test_threshold_boundary_included(self, tmp_path):
        dump = self.make_dump(tmp_path)
        corpus = build_corpus(
            dump, set(), "Information security", 0.27, self.make_provider()
        )
        assert "Other 1" in corpus.manifest  # score 0.27 >= 0.27
        assert corpus.manifest["Other 1"].reason == "scored"

    def test_monotonic_in_threshold(self, tmp_path):
        dump = self.make_dump(tmp_path)
        provider = self.make_provider()
        terms = {"firewall"}
        low = build_corpus(dump, terms, "Information security", 0.1, provider)
        high = build_corpus(dump, terms, "Information security", 0.5, provider)
        assert set(high.manifest) <= set(low.manifest)
        # forced entries invariant under threshold changes
        assert [t for t, e in high.manifest.items() if e.reason == "forced"] == [
            t for t, e in low.manifest.items() if e.reason == "forced"
        ]

    def test_missing_anchor_is_hard_error(self, tmp_path):
        dump = write_dump(tmp_path, dump_xml(page_xml("Only", "body.")))
        with pytest.raises(CorpusError):
            build_corpus(dump, set(), "Information security", 0.27, BowCosineProvider())

    def test_manifest_complete_with_single_reason(self, tmp_path):
        dump = self.make_dump(tmp_path)
        corpus = build_corpus(
            dump, {"firewall"}, "Information security", 0.27, self.make_provider()
        )
        assert {a.title for a in corpus.articles} == set(corpus.manifest)
        for entry in corpus.manifest.values():
            assert entry.reason in ("forced", "scored")

    def test_determinism(self, tmp_path):
        dump = self.make_dump(tmp_path)
        args = (dump, {"firewall"}, "Information security", 0.27, self.make_provider())
        first = build_corpus(*args)
        second = build_corpus(*args)
        assert {t: vars(e) for t, e in first.manifest.items()} == {
            t: vars(e) for t, e in second.manifest.items()
        }


class TestCorpusPersistence:
    def test_round_trip(self, tmp_path):
        dump = TestBuildCorpus().make_dump(tmp_path)
        corpus = build_corpus(
            dump,
            {"firewall"},
            "Information security",
            0.27,
            TestBuildCorpus().make_provider(),
        )
        out = tmp_path / "corpus"
        save_corpus(corpus, str(out))
        loaded = load_corpus(str(out))
        assert sorted(loaded.titles()) == sorted(corpus.titles())
        assert loaded.threshold == corpus.threshold
        assert loaded.anchor_title == corpus.anchor_title
        by_title = {a.title: a.text for a in corpus.articles}
        for article in loaded.articles:
            assert article.text == by_title[article.title]
