from cea.tokenization import detokenize, tokenize, tokens_for_bleu


class TestTokenize:
    def test_punctuation_detached(self):
        assert tokenize("Hello, world!") == ["Hello", ",", "world", "!"]

    def test_internal_punctuation_kept(self):
        assert tokenize("don't stop") == ["don't", "stop"]
        assert tokenize("state-of-the-art") == ["state-of-the-art"]

    def test_nested_edge_punctuation(self):
        assert tokenize('(really "good")') == ["(", "really", '"', "good", '"', ")"]

    def test_pure_punctuation_chunk(self):
        assert tokenize("wait --") == ["wait", "-", "-"]

    def test_case_preserved(self):
        assert tokenize("The Movie") == ["The", "Movie"]

    def test_substitution_stability(self):
        # token counts survive joining and re-splitting, which the
        # modification-rate accounting relies on
        toks = tokenize("honestly , the film was great overall .")
        assert tokenize(detokenize(toks)) == toks


class TestBleuTokens:
    def test_cjk_goes_per_character(self):
        assert tokens_for_bleu("这部电影很好") == ["这", "部", "电", "影", "很", "好"]

    def test_cjk_whitespace_dropped(self):
        assert tokens_for_bleu("这部 电影") == ["这", "部", "电", "影"]

    def test_latin_goes_word_level(self):
        assert tokens_for_bleu("the cat sat") == ["the", "cat", "sat"]
