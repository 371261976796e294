"""Corpus pipeline: segmentation, filtering, annotation extraction, packing,
vocabulary, stats."""

import numpy as np
import pytest

from lctx.corpus import (
    CivilAnnotation,
    CriminalAnnotation,
    DocumentRejected,
    LabelTable,
    Ruleset,
    chinese_numeral,
    corpus_stats,
    extract_annotations,
    filter_by_fact_length,
    judgment_stats,
    pack_documents,
    penalty_months,
    process_corpus,
    read_jsonl,
    segment_case,
    write_jsonl,
)
from lctx.fixtures import synthetic_cases, to_chinese_numeral
from lctx.vocab import CLS_ID, PAD_ID, SEP_ID, CharVocab, build_vocab, char_tokens

RULES = Ruleset()


def make_case(fact_len=60, months_phrase="判处有期徒刑六个月"):
    fact = "事" * fact_len
    return (f"某市检察院指控被告人张某。经审理查明：{fact}。"
            f"本院认为，被告人张某的行为已构成盗窃罪，"
            f"依照《中华人民共和国刑法》第二百六十四条之规定。"
            f"判决如下：被告人张某犯盗窃罪，{months_phrase}。")


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------


def test_segment_populates_four_sections():
    doc = segment_case(make_case(), RULES, "criminal", "d1")
    assert "张某" in doc.parties
    assert doc.fact.startswith("：事")
    assert "盗窃罪" in doc.court_view
    assert "有期徒刑" in doc.judgment
    assert doc.flags == []


def test_segment_missing_judgment_rejected():
    text = "指控张某。经审理查明：" + "事" * 60 + "。本院认为行为已构成盗窃罪。"
    with pytest.raises(DocumentRejected) as exc:
        segment_case(text, RULES)
    assert exc.value.reason == "MISSING_SECTION:judgment"


def test_segment_missing_fact_rejected():
    with pytest.raises(DocumentRejected) as exc:
        segment_case("指控张某。判决如下：无罪。", RULES)
    assert exc.value.reason == "MISSING_SECTION:fact"


def test_segment_missing_court_view_flagged():
    text = "指控张某。经审理查明：" + "事" * 60 + "。判决如下：免予刑事处罚。"
    doc = segment_case(text, RULES)
    assert "missing:court_view" in doc.flags


def test_segment_empty_document_rejected():
    with pytest.raises(DocumentRejected):
        segment_case("   ", RULES)


# ---------------------------------------------------------------------------
# fact-length filter (strict >)
# ---------------------------------------------------------------------------


def test_filter_boundary_50_dropped_51_kept():
    def doc_with(n):
        return segment_case(make_case(fact_len=n), RULES)

    # fact is "：" + n chars + "。" => subtract the two punctuation tokens
    d50 = doc_with(48)
    d51 = doc_with(49)
    assert len(char_tokens(d50.fact)) == 50
    assert len(char_tokens(d51.fact)) == 51
    kept = filter_by_fact_length([d50, d51])
    assert kept == [d51]


def test_filter_empty_corpus():
    assert filter_by_fact_length([]) == []


# ---------------------------------------------------------------------------
# annotation extraction
# ---------------------------------------------------------------------------


def test_chinese_numerals():
    cases = {"六": 6, "十": 10, "十五": 15, "二十": 20, "两": 2,
             "一百二十": 120, "一百零五": 105, "3": 3, "180": 180}
    for text, value in cases.items():
        assert chinese_numeral(text) == value
    with pytest.raises(ValueError):
        chinese_numeral("甲")


def test_numeral_renderer_roundtrip():
    for n in list(range(0, 200)) + [999]:
        assert chinese_numeral(to_chinese_numeral(n)) == n


def test_penalty_six_months():
    assert penalty_months("判处有期徒刑六个月。", RULES) == 6


def test_penalty_years_plus_months():
    assert penalty_months("判处有期徒刑二年三个月。", RULES) == 27


def test_penalty_detention_and_exemption():
    assert penalty_months("判处拘役三个月。", RULES) == 3
    assert penalty_months("免予刑事处罚。", RULES) == 0


def test_penalty_capped_at_180():
    assert penalty_months("判处有期徒刑二十年。", RULES) == 180


def test_penalty_life_sentence_rejected():
    with pytest.raises(DocumentRejected):
        penalty_months("判处无期徒刑。", RULES)


def test_extract_criminal_annotation():
    doc = segment_case(make_case(), RULES, "criminal", "d1")
    charges, laws, causes = LabelTable(), LabelTable(), LabelTable()
    ann = extract_annotations(doc, RULES, charges, laws, causes)
    assert isinstance(ann, CriminalAnnotation)
    assert charges.labels == ["盗窃罪"]
    assert ann.charges == {0}
    assert laws.labels == ["刑法第二百六十四条"]
    assert ann.penalty_months == 6


def test_extract_civil_annotation():
    text = ("原告李某与被告王某。经审理查明：" + "事" * 60 + "。"
            "本院认为，本案系民间借贷纠纷，依照《中华人民共和国民法典》第六百七十五条之规定。"
            "判决如下：被告王某偿还借款。")
    doc = segment_case(text, RULES, "civil", "d2")
    charges, laws, causes = LabelTable(), LabelTable(), LabelTable()
    ann = extract_annotations(doc, RULES, charges, laws, causes)
    assert isinstance(ann, CivilAnnotation)
    assert causes.labels == ["民间借贷纠纷"]
    assert ann.cause_of_action == 0
    assert len(ann.laws) == 1


def test_extract_no_charge_rejected():
    text = ("指控张某。经审理查明：" + "事" * 60 + "。本院认为事实不清。"
            "判决如下：证据不足。")
    doc = segment_case(text, RULES, "criminal", "d3")
    with pytest.raises(DocumentRejected) as exc:
        extract_annotations(doc, RULES, LabelTable(), LabelTable(), LabelTable())
    assert exc.value.reason == "NO_ANNOTATION:charge"


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------


def test_pack_two_docs_one_block():
    blocks = pack_documents([list(range(10, 20)), list(range(30, 40))], 32)
    assert blocks.shape == (1, 32)
    expect = list(range(10, 20)) + [SEP_ID] + list(range(30, 40)) + [SEP_ID] + [PAD_ID] * 10
    np.testing.assert_array_equal(blocks[0], expect)


def test_pack_long_doc_splits():
    blocks = pack_documents([list(range(100, 170))], 32)
    assert blocks.shape == (3, 32)
    joined = blocks.reshape(-1)
    np.testing.assert_array_equal(joined[:70], np.arange(100, 170))
    assert joined[70] == SEP_ID
    assert (joined[71:] == PAD_ID).all()


def test_pack_conserves_tokens():
    rng = np.random.default_rng(0)
    streams = [list(rng.integers(5, 50, size=rng.integers(1, 40))) for _ in range(7)]
    blocks = pack_documents(streams, 16)
    non_pad = int((blocks != PAD_ID).sum())
    assert non_pad == sum(len(s) for s in streams) + len(streams)


def test_pack_never_interleaves():
    streams = [[7] * 5, [9] * 11]
    flat = pack_documents(streams, 8).reshape(-1)
    flat = flat[flat != PAD_ID]
    sevens = np.flatnonzero(flat == 7)
    nines = np.flatnonzero(flat == 9)
    assert sevens.max() < nines.min()


def test_pack_empty():
    assert pack_documents([], 16).shape == (0, 16)


# ---------------------------------------------------------------------------
# vocabulary
# ---------------------------------------------------------------------------


def test_vocab_frequency_order():
    vocab = build_vocab(["aab"])
    assert vocab.transform("a")[0] < vocab.transform("b")[0]


def test_vocab_special_ids():
    vocab = build_vocab(["xy"])
    assert vocab.tokens_[:5] == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    assert (PAD_ID, CLS_ID, SEP_ID) == (0, 2, 3)


def test_vocab_tie_break_by_codepoint():
    vocab = build_vocab(["ba"])  # equal counts -> codepoint order
    assert vocab.transform("a")[0] < vocab.transform("b")[0]


def test_vocab_deterministic_file(tmp_path):
    corpus = [row["text"] for row in synthetic_cases(4, 4, seed=3)]
    p1, p2 = tmp_path / "v1.txt", tmp_path / "v2.txt"
    build_vocab(corpus).save(p1)
    build_vocab(list(corpus)).save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_vocab_unknown_maps_to_unk():
    vocab = build_vocab(["abc"])
    assert vocab.transform("z") == [1]


def test_vocab_max_size():
    vocab = build_vocab(["abcdef"], max_size=7)
    assert len(vocab) == 7


def test_vocab_roundtrip(tmp_path):
    vocab = build_vocab(["法院判决"])
    vocab.save(tmp_path / "v.txt")
    again = CharVocab.load(tmp_path / "v.txt")
    assert again.tokens_ == vocab.tokens_


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def test_process_corpus_on_fixture_cases():
    result = process_corpus(synthetic_cases(6, 6, seed=1), RULES)
    assert len(result.criminal_examples) == 6
    assert len(result.civil_examples) == 6
    assert result.rejections == {}
    for ex in result.criminal_examples:
        assert set(ex) == {"id", "fact", "charges", "laws", "penalty_months"}
        assert all(0 <= c < len(result.charge_table) for c in ex["charges"])
        assert 0 <= ex["penalty_months"] <= 180
    for ex in result.civil_examples:
        assert set(ex) == {"id", "fact", "cause", "laws"}
        assert 0 <= ex["cause"] < len(result.cause_table)


def test_process_corpus_idempotent():
    rows = synthetic_cases(5, 5, seed=2)
    a = process_corpus(rows, RULES)
    b = process_corpus(rows, RULES)
    assert a.criminal_examples == b.criminal_examples
    assert a.civil_examples == b.civil_examples
    assert a.charge_table.labels == b.charge_table.labels


def test_process_corpus_counts_rejections():
    rows = [{"id": "bad1", "kind": "criminal", "text": "没有任何标记的文本"},
            {"id": "bad2", "kind": "martian", "text": "x"}]
    result = process_corpus(rows, RULES)
    assert result.rejections["MISSING_SECTION:fact"] == 1
    assert result.rejections["UNKNOWN_KIND:martian"] == 1


def test_stats_schemas():
    result = process_corpus(synthetic_cases(4, 3, seed=4), RULES)
    pre = corpus_stats(result.documents)
    assert [row["kind"] for row in pre] == ["criminal", "civil"]
    assert set(pre[0]) == {"kind", "docs", "avg_len", "size_bytes"}
    assert pre[0]["docs"] == 4 and pre[1]["docs"] == 3

    judg = judgment_stats(result.criminal_examples, result.civil_examples,
                          result.charge_table, result.law_table, result.cause_table)
    assert set(judg[0]) == {"kind", "cases", "avg_len", "n_labels", "n_laws", "prison"}
    assert judg[0]["prison"] and "-" in judg[0]["prison"]
    assert judg[1]["prison"] == ""


def test_jsonl_roundtrip_and_error_line(tmp_path):
    rows = [{"id": "a", "kind": "criminal", "text": "正文"}]
    path = tmp_path / "cases.jsonl"
    write_jsonl(path, rows)
    assert read_jsonl(path) == rows
    path.write_text('{"ok": 1}\n{broken\n', encoding="utf-8")
    with pytest.raises(ValueError, match=":2:"):
        read_jsonl(path)


def test_ruleset_roundtrip(tmp_path):
    rules = Ruleset()
    rules.save(tmp_path / "rules.json")
    loaded = Ruleset.load(tmp_path / "rules.json")
    assert loaded.rules == rules.rules
