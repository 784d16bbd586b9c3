import pytest
from hypothesis import given, strategies as st

from medmatch.textnorm import (
    NormalizerConfig,
    Stemmer,
    char_ngrams,
    load_language_pack,
    normalize,
    strip_diacritics,
)


@pytest.fixture(scope="module")
def ro():
    return load_language_pack("ro")


def test_romanian_pipeline_strips_diacritics_and_stems(ro):
    tokens = normalize("Radiografie toracică", ro).tokens
    assert len(tokens) == 2
    assert all("ă" not in t and "ţ" not in t for t in tokens)
    # both words survive stopword removal and share their stems with the
    # diacritic-free spelling
    assert tokens == normalize("radiografie toracica", ro).tokens


def test_empty_input(ro):
    assert normalize("", ro).tokens == ()


def test_all_stopword_query_collapses_to_empty(ro):
    assert normalize("și de la", ro).tokens == ()
    assert normalize("si de la", ro).tokens == ()


def test_diacritic_golden_mapping():
    assert strip_diacritics("ă â î ș ş ț ţ") == "a a i s s t t"


def test_punctuation_becomes_boundary(ro):
    with_punct = normalize("ecg, (torace)!", ro).tokens
    without = normalize("ecg torace", ro).tokens
    assert with_punct == without


def test_digits_are_retained(ro):
    assert "25" in normalize("vitamina d 25 oh", ro).tokens


def test_stopwords_never_emitted(ro):
    text = "analiza de sange si urina pentru copil"
    assert not set(normalize(text, ro).tokens) & ro.stopwords


@given(st.text(max_size=80))
def test_idempotence(text):
    ro = load_language_pack("ro")
    once = normalize(text, ro).tokens
    again = normalize(" ".join(once), ro).tokens
    assert once == again


@given(st.text(max_size=80))
def test_no_empty_tokens_and_no_stopwords(text):
    ro = load_language_pack("ro")
    tokens = normalize(text, ro).tokens
    assert all(tokens)
    assert not set(tokens) & ro.stopwords


def test_stemmer_disabled_keeps_full_words():
    cfg = NormalizerConfig(stemmer=Stemmer.NONE)
    assert normalize("radiografie", cfg).tokens == ("radiografie",)


def test_min_stem_length_guard(ro):
    # short words never get stripped below 3 chars
    for token in normalize("ecg ie", ro).tokens:
        assert len(token) >= 2


def test_char_ngrams_bigram_example():
    assert dict(char_ngrams("ab", 2, 2)) == {"^a": 1, "ab": 1, "b$": 1}


def test_char_ngrams_trigram_example():
    assert dict(char_ngrams("ecg", 3, 3)) == {"^ec": 1, "ecg": 1, "cg$": 1}


def test_char_ngrams_empty():
    assert char_ngrams("", 2, 3) == {}


def test_char_ngrams_strips_diacritics_and_lowercases():
    assert char_ngrams("Toracică", 3, 3) == char_ngrams("toracica", 3, 3)


def test_char_ngrams_rejects_bad_range():
    with pytest.raises(ValueError):
        char_ngrams("abc", 3, 2)
    with pytest.raises(ValueError):
        char_ngrams("abc", 0, 2)


def test_language_pack_missing():
    with pytest.raises(FileNotFoundError):
        load_language_pack("nosuchpack")
