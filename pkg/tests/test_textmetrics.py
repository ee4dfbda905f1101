import pytest

from digitwash.errors import EmptyDocument, InvalidRegex
from digitwash.ingest import MdaDocument
from digitwash.textmetrics import (
    TermDictionary,
    compute_text_metrics,
    count_term_hits,
    measure_length,
    normalize_text,
)


def d(*terms, name="test"):
    return TermDictionary.from_terms(name, list(terms))


class TestCountTermHits:
    def test_empty_text(self):
        assert count_term_hits("", d("数字化")) == 0

    def test_cjk_substring_two_hits(self):
        # manual enumeration: 数字化转型推动数字化 contains 数字化 at 0 and 7
        assert count_term_hits("数字化转型推动数字化", d("数字化")) == 2

    def test_absent_term(self):
        assert count_term_hits("云计算平台", d("数字化")) == 0

    def test_terms_counted_independently(self):
        text = "数字化和云计算和数字化"
        assert count_term_hits(text, d("数字化", "云计算")) == 3

    def test_ascii_case_insensitive(self):
        assert count_term_hits("Big Data and BIG DATA", d("big data")) == 2

    def test_regex_term(self):
        dic = TermDictionary("r", [("大\\s?数\\s?据", True)])
        assert count_term_hits("大数据与大 数 据", dic) == 2

    def test_invalid_regex_fails_at_load(self):
        with pytest.raises(InvalidRegex):
            TermDictionary("bad", [("[unclosed", True)])

    def test_deduplication(self):
        dic = TermDictionary.from_terms("dup", ["数字化", "数字化"])
        assert len(dic.terms) == 1


class TestMeasureLength:
    def test_whitespace_excluded(self):
        assert measure_length("ab c") == 3

    def test_cjk_one_per_char(self):
        assert measure_length("数字化") == 3

    def test_empty(self):
        assert measure_length("") == 0

    def test_control_chars_excluded(self):
        assert measure_length("a\x00b​c") == 3  # NUL and zero-width excluded


class TestComputeTextMetrics:
    DICTS = dict(
        dt_dict=d("数字化", name="dt"),
        epu_dict=d("政策", name="epu"),
        pos_dict=d("增长", name="pos"),
        neg_dict=d("下降", name="neg"),
    )

    def test_dtw_hand_count(self):
        # 10 countable chars, the DT term appears twice
        doc = MdaDocument("A", 2015, "数字化一二数字化三四")
        rec = compute_text_metrics(doc, **self.DICTS)
        assert rec.total_words == 10
        assert rec.dt_hits == 2
        assert rec.dtw == pytest.approx(0.2)

    def test_sentiment_formula(self):
        doc = MdaDocument("A", 2015, "增长增长增长下降")
        rec = compute_text_metrics(doc, **self.DICTS)
        assert rec.pos_hits == 3 and rec.neg_hits == 1
        assert rec.sentiment == pytest.approx(0.5)

    def test_no_hits(self):
        doc = MdaDocument("A", 2015, "平平无奇的文本")
        rec = compute_text_metrics(doc, **self.DICTS)
        assert rec.dtw == 0 and rec.fepu == 0 and rec.sentiment == 0

    def test_empty_document_raises(self):
        with pytest.raises(EmptyDocument):
            compute_text_metrics(MdaDocument("A", 2015, "  \n "), **self.DICTS)

    def test_doubling_doubles_counts_keeps_ratios(self):
        base = "数字化一二三政策增长四五六"
        r1 = compute_text_metrics(MdaDocument("A", 1, base), **self.DICTS)
        r2 = compute_text_metrics(MdaDocument("A", 1, base * 2), **self.DICTS)
        assert r2.dt_hits == 2 * r1.dt_hits
        assert r2.total_words == 2 * r1.total_words
        assert r2.dtw == pytest.approx(r1.dtw)
        assert r2.fepu == pytest.approx(r1.fepu)

    def test_whitespace_invariance(self):
        body = "数字化一二政策三"
        r1 = compute_text_metrics(MdaDocument("A", 1, body), **self.DICTS)
        r2 = compute_text_metrics(MdaDocument("A", 1, f"  \n\t{body}  \n"), **self.DICTS)
        assert r1.dt_hits == r2.dt_hits
        assert r1.total_words == r2.total_words

    def test_padding_dilutes_ratios(self):
        body = "数字化一二三"
        r1 = compute_text_metrics(MdaDocument("A", 1, body), **self.DICTS)
        r2 = compute_text_metrics(MdaDocument("A", 1, body + "四五六七八"), **self.DICTS)
        assert r2.dtw < r1.dtw


def test_normalize_collapses_whitespace():
    assert normalize_text(" a \n\t b ") == "a b"


def test_dictionary_file_roundtrip(tmp_path):
    path = tmp_path / "terms.txt"
    path.write_text("# comment\n数字化\nre:大\\s?数\\s?据\n\n云计算\n", encoding="utf-8")
    dic = TermDictionary.from_file(path, name="dt")
    assert dic.terms == [("数字化", False), ("大\\s?数\\s?据", True), ("云计算", False)]
