"""Exception types shared across the engine."""


class HerbarError(Exception):
    """Base class for all engine errors."""


class ImageTooSmall(HerbarError):
    pass


class SingularHomography(HerbarError):
    pass


class DegenerateConfiguration(HerbarError):
    pass


class BehindCamera(HerbarError):
    pass


class TooFewFeatures(HerbarError):
    """Registration rejected: the picture has too little natural texture."""

    def __init__(self, keypoint_count, rating, minimum):
        self.keypoint_count = keypoint_count
        self.rating = rating
        self.minimum = minimum
        super().__init__(
            f"TooFewFeatures: {keypoint_count} keypoints < required {minimum} "
            f"(rated {rating.stars} stars)"
        )


class DuplicateName(HerbarError):
    pass


class DatabaseFormatError(HerbarError):
    pass


class BadMagic(DatabaseFormatError):
    pass


class UnsupportedVersion(DatabaseFormatError):
    pass


class TruncatedFile(DatabaseFormatError):
    pass


class ChecksumMismatch(DatabaseFormatError):
    pass


class CatalogError(HerbarError):
    pass


class ParseError(CatalogError):
    pass


class DuplicateId(CatalogError):
    pass


class MissingSection(CatalogError):
    pass


class NotFound(HerbarError):
    pass
