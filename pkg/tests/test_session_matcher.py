import datetime
import random

import pytest

from parlalign.errors import ValidationError
from parlalign.session_matcher import (
    MediaEntry,
    SessionKey,
    entries_to_csv,
    match_sessions,
    pairs_to_csv,
    read_manifest,
)


def rec(n, iso, path="r.mp3", dur=3600.0):
    return MediaEntry("recording", path, SessionKey(n, datetime.date.fromisoformat(iso)), dur)


def tr(n, iso, path="t.xhtml"):
    return MediaEntry("transcript", path, SessionKey(n, datetime.date.fromisoformat(iso)))


class TestMatchSessions:
    def test_exact_key_match(self):
        result = match_sessions([rec(7, "2015-03-10")], [tr(7, "2015-03-10")])
        assert len(result.pairs) == 1
        assert not result.unmatched_recordings and not result.unmatched_transcripts

    def test_same_session_number_different_day_does_not_match(self):
        result = match_sessions([rec(7, "2015-03-10")], [tr(7, "2015-03-11")])
        assert result.pairs == []
        assert len(result.unmatched_recordings) == 1
        assert len(result.unmatched_transcripts) == 1

    def test_duplicate_key_quarantined(self):
        result = match_sessions(
            [rec(7, "2015-03-10", "a.mp3"), rec(7, "2015-03-10", "b.mp3")],
            [tr(7, "2015-03-10")],
        )
        assert result.pairs == []
        assert len(result.unmatched_recordings) == 2
        assert len(result.unmatched_transcripts) == 1
        assert len(result.warnings) == 1
        assert result.warnings[0]["warning"] == "ambiguous_key"

    def test_partition_and_symmetry(self):
        rng = random.Random(31)
        for _ in range(100):
            recs, trs = [], []
            for _ in range(rng.randint(0, 12)):
                n = rng.randint(1, 4)
                day = rng.randint(1, 5)
                recs.append(rec(n, f"2015-03-{day:02d}", f"r{len(recs)}.mp3"))
            for _ in range(rng.randint(0, 12)):
                n = rng.randint(1, 4)
                day = rng.randint(1, 5)
                trs.append(tr(n, f"2015-03-{day:02d}", f"t{len(trs)}.xhtml"))
            result = match_sessions(recs, trs)
            assert len(result.pairs) + len(result.unmatched_recordings) == len(recs)
            assert len(result.pairs) + len(result.unmatched_transcripts) == len(trs)
            # swapping sides swaps the unmatched lists and mirrors the pairs
            swapped = match_sessions(trs, recs)
            assert [(b.path, a.path) for a, b in swapped.pairs] == [
                (b.path, a.path) for b, a in result.pairs
            ]
            assert swapped.unmatched_recordings == result.unmatched_transcripts
            assert swapped.unmatched_transcripts == result.unmatched_recordings

    def test_output_sorted_by_key(self):
        recs = [rec(9, "2015-06-01", "c"), rec(2, "2015-05-01", "a"), rec(2, "2015-04-01", "b")]
        trs = [tr(2, "2015-04-01"), tr(9, "2015-06-01"), tr(2, "2015-05-01")]
        result = match_sessions(recs, trs)
        keys = [(r.key.session_number, r.key.date) for r, _ in result.pairs]
        assert keys == sorted(keys)

    def test_determinism(self):
        recs = [rec(1, "2015-01-01"), rec(3, "2015-01-02")]
        trs = [tr(3, "2015-01-02"), tr(2, "2015-01-01")]
        assert match_sessions(recs, trs) == match_sessions(recs, trs)


class TestSessionKeyValidation:
    def test_zero_session_number_rejected(self):
        with pytest.raises(ValidationError):
            SessionKey(0, datetime.date(2015, 1, 1))

    def test_negative_duration_rejected(self):
        with pytest.raises(ValidationError):
            MediaEntry("recording", "a", SessionKey(1, datetime.date(2015, 1, 1)), -1.0)

    def test_empty_path_rejected(self):
        with pytest.raises(ValidationError):
            MediaEntry("recording", "", SessionKey(1, datetime.date(2015, 1, 1)))


class TestManifestIo:
    def test_round_trip(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text(
            "kind,path,session_number,date,duration_seconds\n"
            "recording,audio/7.mp3,7,2015-03-10,12345.6\n"
            "transcript,docs/7.xhtml,7,2015-03-10,0\n",
            encoding="utf-8",
        )
        recordings, transcripts = read_manifest(manifest)
        assert len(recordings) == 1 and len(transcripts) == 1
        assert recordings[0].duration_seconds == 12345.6
        result = match_sessions(recordings, transcripts)
        csv_text = pairs_to_csv(result.pairs)
        assert csv_text.splitlines()[1] == "audio/7.mp3,docs/7.xhtml,7,2015-03-10"
        assert entries_to_csv(recordings).splitlines()[1].startswith("recording,audio/7.mp3,7,")

    def test_bad_header_rejected(self, tmp_path):
        manifest = tmp_path / "m.csv"
        manifest.write_text("kind,path,number,date,duration\nx,y,1,2015-01-01,0\n")
        with pytest.raises(ValidationError):
            read_manifest(manifest)

    def test_bad_date_reports_row(self, tmp_path):
        manifest = tmp_path / "m.csv"
        manifest.write_text(
            "kind,path,session_number,date,duration_seconds\n"
            "recording,a.mp3,7,2015-13-45,10\n"
        )
        with pytest.raises(ValidationError, match=":2:"):
            read_manifest(manifest)

    def test_transcript_with_duration_rejected(self, tmp_path):
        manifest = tmp_path / "m.csv"
        manifest.write_text(
            "kind,path,session_number,date,duration_seconds\n"
            "transcript,a.xhtml,7,2015-03-10,5\n"
        )
        with pytest.raises(ValidationError):
            read_manifest(manifest)
