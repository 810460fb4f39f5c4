"""
Tests for IMGD archive persistence
"""
import numpy as np
import pytest

from apps.common.exceptions import ArchiveError
from apps.videos.archive import DatasetArchive


@pytest.mark.videos
@pytest.mark.unit
class TestArchiveRoundTrip:
    """Test save and load"""

    def test_round_trip_is_bitwise(self, create_archive, tmp_path):
        archive = create_archive()
        loaded = DatasetArchive.load(archive.save(tmp_path / 'data.imgd'))
        assert loaded.equals(archive)
        assert loaded.clips.tobytes() == archive.clips.tobytes()
        assert loaded.spec == archive.spec

    def test_checksum_stable_across_save(self, create_archive, tmp_path):
        archive = create_archive()
        first = DatasetArchive.load(archive.save(tmp_path / 'a.imgd')).checksum
        second = DatasetArchive.load(archive.save(tmp_path / 'b.imgd')).checksum
        assert first == second == archive.checksum

    def test_header_records_checksum_and_statistics(self, create_archive):
        header = create_archive().header()
        assert set(header) >= {'spec', 'class_names', 'mean', 'std', 'sha256'}

    def test_normalized_clip_uses_stored_statistics(self, create_archive):
        archive = create_archive()
        expected = (archive.clips[0] - np.float32(archive.mean)) / np.float32(archive.std)
        np.testing.assert_allclose(archive.normalized(0), expected, rtol=1e-6)


@pytest.mark.videos
@pytest.mark.unit
class TestArchiveErrors:
    """Test rejection of malformed files"""

    def test_bad_magic_names_format(self, create_archive, tmp_path):
        data = bytearray(create_archive().encode())
        data[:4] = b'XXXX'
        path = tmp_path / 'bad.imgd'
        path.write_bytes(bytes(data))
        with pytest.raises(ArchiveError, match='IMGD'):
            DatasetArchive.load(path)

    def test_bad_version(self, create_archive):
        data = bytearray(create_archive().encode())
        data[4] = 9
        with pytest.raises(ArchiveError, match='version'):
            DatasetArchive.decode(bytes(data))

    def test_truncation_reports_offset(self, create_archive):
        data = create_archive().encode()
        with pytest.raises(ArchiveError) as excinfo:
            DatasetArchive.decode(data[:-10])
        assert excinfo.value.offset == len(data) - 10

    def test_corrupted_payload_fails_checksum(self, create_archive):
        data = bytearray(create_archive().encode())
        data[-20] ^= 0xFF
        with pytest.raises(ArchiveError, match='checksum'):
            DatasetArchive.decode(bytes(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArchiveError):
            DatasetArchive.load(tmp_path / 'absent.imgd')

    def test_unknown_split(self, create_archive):
        with pytest.raises(ArchiveError):
            create_archive().split_indices('test')
