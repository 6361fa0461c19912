#include "tilecrypt/selenc.hpp"

namespace tilecrypt::selenc {

namespace {

std::string_view error_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::UnknownSuffix: return "UnknownSuffix";
    case ErrorKind::UnknownScheme: return "UnknownScheme";
    case ErrorKind::UnknownLevel: return "UnknownLevel";
    }
    return "?";
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

std::string_view to_string(EncryptionLevel level)
{
    switch (level) {
    case EncryptionLevel::None: return "None";
    case EncryptionLevel::AllI: return "AllI";
    case EncryptionLevel::AllIP: return "AllIP";
    case EncryptionLevel::Full: return "Full";
    }
    return "?";
}

std::string_view to_string(SchemeId scheme)
{
    switch (scheme) {
    case SchemeId::Full: return "full";
    case SchemeId::AllIP: return "alliP";
    case SchemeId::MajorAllP: return "majorP";
    case SchemeId::MajorAllI: return "majorI";
    }
    return "?";
}

std::string_view to_string(TileRole role)
{
    switch (role) {
    case TileRole::Major: return "Major";
    case TileRole::Minor: return "Minor";
    case TileRole::NonViewport: return "NonViewport";
    }
    return "?";
}

SchemeId parse_scheme(std::string_view name)
{
    for (auto s : kAllSchemes) {
        if (to_string(s) == name) return s;
    }
    throw Error(ErrorKind::UnknownScheme, "'" + std::string(name) + "' (expected full, alliP, majorP or majorI)");
}

EncryptionLevel parse_level(std::string_view name)
{
    for (auto l : kAllLevels) {
        if (to_string(l) == name) return l;
    }
    throw Error(ErrorKind::UnknownLevel, "'" + std::string(name) + "'");
}

bool covers(EncryptionLevel level, FrameType type)
{
    switch (type) {
    case FrameType::I: return level >= EncryptionLevel::AllI;
    case FrameType::P: return level >= EncryptionLevel::AllIP;
    case FrameType::B: return level >= EncryptionLevel::Full;
    case FrameType::NonVCL: return false;
    }
    return false;
}

bool viewport_aware(SchemeId scheme) { return scheme == SchemeId::MajorAllP || scheme == SchemeId::MajorAllI; }

EncryptionLevel level_for(SchemeId scheme, TileRole role)
{
    if (role == TileRole::NonViewport) return EncryptionLevel::None;
    const bool major = role == TileRole::Major;
    switch (scheme) {
    case SchemeId::Full: return EncryptionLevel::Full;
    case SchemeId::AllIP: return EncryptionLevel::AllIP;
    case SchemeId::MajorAllP: return major ? EncryptionLevel::AllIP : EncryptionLevel::AllI;
    case SchemeId::MajorAllI: return major ? EncryptionLevel::AllI : EncryptionLevel::None;
    }
    return EncryptionLevel::None;
}

std::string_view suffix_for(EncryptionLevel level)
{
    switch (level) {
    case EncryptionLevel::None: return "";
    case EncryptionLevel::AllI: return "_allI";
    case EncryptionLevel::AllIP: return "_allI+P";
    case EncryptionLevel::Full: return "_full";
    }
    return "";
}

EncryptionLevel parse_suffix(std::string_view name)
{
    if (const auto slash = name.find_last_of('/'); slash != std::string_view::npos) name.remove_prefix(slash + 1);
    const auto underscore = name.rfind('_');
    if (underscore == std::string_view::npos) return EncryptionLevel::None;
    std::string_view token = name.substr(underscore);
    if (const auto dot = token.rfind('.'); dot != std::string_view::npos) token = token.substr(0, dot);
    for (auto l : kAllLevels) {
        if (l != EncryptionLevel::None && suffix_for(l) == token) return l;
    }
    if (token.starts_with("_all") || token.starts_with("_full")) {
        throw Error(ErrorKind::UnknownSuffix, "'" + std::string(token) + "' in '" + std::string(name) + "'");
    }
    return EncryptionLevel::None;
}

}  // namespace tilecrypt::selenc
