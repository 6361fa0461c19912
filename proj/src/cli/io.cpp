#include "tilecrypt/cli.hpp"

#include <glob.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>

namespace tilecrypt::cli {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingSegment: return "MissingSegment";
    case ErrorKind::UsageError: return "UsageError";
    }
    return "?";
}

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

Bytes read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::IoError, "error reading " + path.string());
    return out;
}

std::string read_text(const fs::path& path)
{
    const Bytes b = read_file(path);
    return std::string(b.begin(), b.end());
}

namespace {

std::atomic<unsigned> temp_counter{0};

fs::path temp_sibling(const fs::path& path)
{
    return path.parent_path() / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()) + "-" +
                                 std::to_string(temp_counter.fetch_add(1)));
}

void write_raw(const fs::path& path, const char* data, std::size_t size)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(data, std::streamsize(size));
    out.close();
    if (!out) throw Error(ErrorKind::IoError, "error writing " + path.string());
}

}  // namespace

void write_file_atomic(const fs::path& path, ByteView data)
{
    std::error_code ec;
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = temp_sibling(path);
    try {
        write_raw(tmp, reinterpret_cast<const char*>(data.data()), data.size());
        fs::rename(tmp, path);
    } catch (const fs::filesystem_error& e) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::IoError, "cannot move output into " + path.string() + ": " + e.what());
    } catch (...) {
        fs::remove(tmp, ec);
        throw;
    }
}

void write_text_atomic(const fs::path& path, std::string_view text)
{
    write_file_atomic(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

StagedOutput::StagedOutput(fs::path target) : target_(std::move(target))
{
    std::error_code ec;
    fs::create_directories(target_, ec);
    if (ec || !fs::is_directory(target_)) throw Error(ErrorKind::IoError, "cannot create output directory " + target_.string());
    staging_ = target_ / (".staging" + std::to_string(::getpid()) + "-" + std::to_string(temp_counter.fetch_add(1)));
    fs::create_directories(staging_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create staging directory " + staging_.string());
}

StagedOutput::~StagedOutput()
{
    std::error_code ec;
    fs::remove_all(staging_, ec);
}

fs::path StagedOutput::path_for(const fs::path& relative) const { return staging_ / relative; }

void StagedOutput::write(const fs::path& relative, ByteView data) const
{
    const fs::path p = path_for(relative);
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    write_raw(p, reinterpret_cast<const char*>(data.data()), data.size());
}

void StagedOutput::write_text(const fs::path& relative, std::string_view text) const
{
    write(relative, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void StagedOutput::commit()
{
    if (committed_) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(staging_))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    try {
        for (const auto& f : files) {
            const fs::path dest = target_ / fs::relative(f, staging_);
            fs::create_directories(dest.parent_path());
            fs::rename(f, dest);
        }
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::IoError, std::string("cannot move staged outputs: ") + e.what());
    }
    committed_ = true;
}

std::vector<fs::path> glob_paths(const std::string& pattern)
{
    glob_t g{};
    std::vector<fs::path> out;
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw Error(ErrorKind::IoError, "cannot expand pattern '" + pattern + "'");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tilecrypt::cli
