#include "dagi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dagi/dataio.hpp"
#include "dagi/errors.hpp"

namespace dagi {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'G', 'I', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size())
            throw FormatError(path_ + ": truncated checkpoint (needed " + std::to_string(n) +
                              " bytes at offset " + std::to_string(pos_) + ")");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        pos_ += 4;
        return x;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i)
            x |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        pos_ += 8;
        return x;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool exhausted() const { return pos_ == bytes_.size(); }
    const std::string& path() const { return path_; }

private:
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

const nlohmann::ordered_json& Checkpoint::field(const std::string& key) const {
    const auto it = header.find(key);
    if (it == header.end())
        throw FormatError("checkpoint header lacks required field '" + key + "'");
    return *it;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    if (ckpt.header.contains("matrices"))
        throw ContractError("checkpoint header key 'matrices' is reserved for the payload manifest");
    nlohmann::ordered_json header = ckpt.header;
    auto& manifest = header["matrices"] = nlohmann::ordered_json::array();
    for (const auto& [name, m] : ckpt.matrices)
        manifest.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    const std::string header_text = header.dump();

    std::string out;
    out.append(kMagic, sizeof kMagic);
    put_u32(out, kCheckpointVersion);
    put_u64(out, header_text.size());
    out += header_text;
    for (const auto& [name, m] : ckpt.matrices)
        for (std::size_t j = 0; j < m.cols(); ++j)
            for (std::size_t i = 0; i < m.rows(); ++i) put_f64(out, m(i, j));
    atomic_write(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path);

    const std::string magic = r.take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0)
        throw FormatError(path + ": not a model checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": checkpoint format-version " + std::to_string(version) +
                          " unsupported (this build reads version " +
                          std::to_string(kCheckpointVersion) + ")");
    const std::uint64_t header_len = r.u64();
    const std::string header_text = r.take(header_len);

    Checkpoint ckpt;
    try {
        ckpt.header = nlohmann::ordered_json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad checkpoint header JSON: " + e.what());
    }
    const auto manifest = ckpt.field("matrices");
    ckpt.header.erase("matrices"); // manifest is an encoding detail; headers round-trip
    if (!manifest.is_array())
        throw FormatError(path + ": checkpoint matrix manifest is not a list");
    for (const auto& entry : manifest) {
        std::string name;
        std::size_t rows = 0, cols = 0;
        try {
            name = entry.at("name").get<std::string>();
            rows = entry.at("rows").get<std::size_t>();
            cols = entry.at("cols").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ": bad matrix manifest entry: " + e.what());
        }
        Matrix m(rows, cols);
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t i = 0; i < rows; ++i) m(i, j) = r.f64();
        ckpt.matrices.emplace_back(std::move(name), std::move(m));
    }
    if (!r.exhausted())
        throw FormatError(path + ": trailing bytes after the declared payload");
    return ckpt;
}

} // namespace dagi
