########################################################################################################################
# PREFACE
# Exception hierarchy of the package. Every error carries a key into JSON_LOGIC/ErrorsListing.json, whose [title, body]
# pairs are formatted with the keyword arguments given at raise time. All errors subclass ValueError so that callers
# treating bad numeric input generically keep working.
########################################################################################################################
def load_errors_listing() -> dict:
    # FileOps imports UsageError from here
    from src.KnMaps_HelperFuncs_FileOps import load_json_logic
    return load_json_logic("ErrorsListing")


def listing_message(key: str, **kwargs) -> str:
    """
    Renders the message registered under key in the errors listing

    :param key: the name of the error within ErrorsListing.json
    :param kwargs: the values for the placeholders of the body
    :return: "title: body" with the placeholders filled in; falls back to the raw kwargs if a placeholder is missing
    """
    title, body = load_errors_listing().get(key, [key, "{detail}"])
    try:
        return f"{title}: {body.format(**kwargs)}"
    except (KeyError, IndexError, ValueError):
        return f"{title}: {kwargs}"


class KnMapsError(ValueError):
    key: str = "DomainError"

    def __init__(self, **kwargs):
        self.details: dict = kwargs
        super().__init__(listing_message(self.key, **kwargs))


class InvalidSpec(KnMapsError):
    key = "InvalidSpec"


class InvalidEpsilon(KnMapsError):
    key = "InvalidEpsilon"


class DomainError(KnMapsError):
    key = "DomainError"


class NotOnSurface(KnMapsError):
    key = "NotOnSurface"


class NotAdmissible(KnMapsError):
    key = "NotAdmissible"


class OutsideBall(KnMapsError):
    key = "OutsideBall"


class OutsidePolyhedron(KnMapsError):
    key = "OutsidePolyhedron"


class StepTooLarge(KnMapsError):
    key = "StepTooLarge"


class OpenCurve(KnMapsError):
    key = "OpenCurve"


class DegenerateCurve(KnMapsError):
    key = "DegenerateCurve"


class NonPlanar(KnMapsError):
    key = "NonPlanar"


class UsageError(KnMapsError):
    key = "UsageError"
