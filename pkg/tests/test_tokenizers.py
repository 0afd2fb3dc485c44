import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doclink.tokenizers import WordPunctTokenizer, split_pieces


def test_pieces_concatenate_back():
    s = "heart attack (acute), grade-II!"
    assert "".join(split_pieces(s)) == s


def test_round_trip_on_fitted_strings():
    strings = ["heart attack", "β-blocker dose", "pre-eclamptic toxaemia"]
    tok = WordPunctTokenizer.fit(strings)
    for s in strings:
        assert tok.decode(tok.encode(s)) == s


def test_byte_fallback_round_trips_unfitted_text():
    tok = WordPunctTokenizer.fit(["known words only"])
    s = "völlig unbekannt 漢字"
    assert tok.decode(tok.encode(s)) == s


def test_end_token_never_produced_by_encode():
    tok = WordPunctTokenizer.fit(["a b c", "d-e"])
    for s in ["a b c", "d-e", "totally new text!"]:
        assert tok.end_token not in tok.encode(s)


def test_fingerprint_tracks_vocabulary():
    t1 = WordPunctTokenizer.fit(["alpha beta"])
    t2 = WordPunctTokenizer.fit(["alpha beta"])
    t3 = WordPunctTokenizer.fit(["alpha beta gamma"])
    assert t1.fingerprint() == t2.fingerprint()
    assert t1.fingerprint() != t3.fingerprint()


def test_save_load_preserves_behavior(tmp_path):
    tok = WordPunctTokenizer.fit(["heart attack", "heart failure"])
    path = tmp_path / "tok.json"
    tok.save(path)
    loaded = WordPunctTokenizer.load(path)
    assert loaded.fingerprint() == tok.fingerprint()
    assert loaded.encode("heart attack") == tok.encode("heart attack")


def test_load_rejects_wrong_format(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else", "version": 1, "pieces": []}')
    with pytest.raises(ValueError, match="version-1 tokenizer"):
        WordPunctTokenizer.load(path)


@given(st.text(max_size=60))
@settings(max_examples=300, deadline=None)
def test_round_trip_holds_for_arbitrary_text(s):
    tok = WordPunctTokenizer.fit(["seed vocab words"])
    assert tok.decode(tok.encode(s)) == s
