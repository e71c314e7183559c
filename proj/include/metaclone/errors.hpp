#pragma once

#include <stdexcept>
#include <string>

namespace metaclone {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define METACLONE_ERROR(Name) \
    struct Name : Error {     \
        using Error::Error;   \
    }

// corpus ingest
METACLONE_ERROR(MissingFile);
METACLONE_ERROR(MalformedMetadata);
METACLONE_ERROR(EmptyCorpus);
METACLONE_ERROR(UnknownLanguage);

// dataset builder
METACLONE_ERROR(InsufficientPairs);
METACLONE_ERROR(InsufficientProblems);
METACLONE_ERROR(InsufficientSubmissions);
METACLONE_ERROR(LanguageOverlap);
METACLONE_ERROR(MalformedDataset);
METACLONE_ERROR(IoError);
METACLONE_ERROR(ParseError);

// episodes
METACLONE_ERROR(NotEnoughClasses);
METACLONE_ERROR(NotEnoughSamples);
METACLONE_ERROR(DegenerateEpisode);

// encoder
METACLONE_ERROR(EmptySequence);
METACLONE_ERROR(ZeroVector);

// contrastive
METACLONE_ERROR(NonPositiveTemperature);
METACLONE_ERROR(NoNegatives);
METACLONE_ERROR(InsufficientData);

// metrics
METACLONE_ERROR(LengthMismatch);
METACLONE_ERROR(EmptyInput);
METACLONE_ERROR(InsufficientCandidates);

// training / orchestration
METACLONE_ERROR(OverlapError);
METACLONE_ERROR(InvalidArgument);

#undef METACLONE_ERROR

}  // namespace metaclone
