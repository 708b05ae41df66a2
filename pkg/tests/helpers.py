"""Small builders shared by the rule and acceptance tests."""

from speakerid.ingest import document_from_text
from speakerid.lexicons import default_lexicons
from speakerid.mentions import detect_mentions, merge_aliases
from speakerid.quotes import extract_utterances
from speakerid.rules import DirectPatterns, MentionIndex, direct_speaker_rule

PATTERNS = DirectPatterns(default_lexicons().speech_verbs)


def direct_results(text):
    """(speaker surface or None, votes, markers) for every utterance in ``text``."""
    doc = document_from_text(text)
    utts = extract_utterances(doc)
    ms = detect_mentions(doc, range(len(doc.sentences)), utterances=utts)
    ents = merge_aliases(ms)
    entity_of = {mid: e.entity_id for e in ents for mid in e.mention_ids}
    names = {e.entity_id: e.canonical for e in ents}
    index = MentionIndex(ms)
    out = []
    for u in utts:
        votes, markers = direct_speaker_rule(u, doc, index, entity_of, PATTERNS)
        if votes:
            who = names[votes[0].entity_id]
        elif markers:
            who = markers[0].mention.surface
        else:
            who = None
        out.append((who, votes, markers))
    return out
