#include "s2s/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace s2s {

namespace {

constexpr char kMagic[4] = {'S', '2', 'S', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const
    {
        if (bytes_.size() - pos_ < n)
            throw FormatError(std::string("checkpoint truncated while reading ") + what + " at offset " +
                              std::to_string(pos_));
    }

    std::uint32_t u32(const char* what)
    {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint8_t u8(const char* what)
    {
        need(1, what);
        return bytes_[pos_++];
    }

    const std::uint8_t* take(std::size_t n, const char* what)
    {
        need(n, what);
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors<float>& tensors)
{
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, std::uint32_t(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_u32(out, std::uint32_t(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        if (t.rank() > 255) throw ContractError("tensor rank exceeds checkpoint limit");
        out.push_back(std::uint8_t(t.rank()));
        for (auto d : t.shape()) put_u32(out, std::uint32_t(d));
        const auto values = t.data();
        const auto* raw = reinterpret_cast<const std::uint8_t*>(values.data());
        out.insert(out.end(), raw, raw + values.size() * sizeof(float));
    }
    return out;
}

NamedTensors<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes)
{
    Reader in(bytes);
    const std::uint8_t* magic = in.take(4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a checkpoint: bad magic bytes");
    const std::uint32_t version = in.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = in.u32("tensor count");

    NamedTensors<float> tensors;
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint32_t name_len = in.u32("name length");
        const auto* name_bytes = in.take(name_len, "tensor name");
        std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
        const std::uint8_t rank = in.u8("rank");
        if (rank == 0) throw FormatError("tensor '" + name + "' has rank 0");
        Shape shape;
        for (std::uint8_t r = 0; r < rank; ++r) {
            const std::uint32_t d = in.u32("dimension");
            if (d == 0) throw FormatError("tensor '" + name + "' has a zero extent");
            shape.push_back(d);
        }
        const std::size_t n = shape_numel(shape);
        if (n > in.remaining() / sizeof(float))
            throw FormatError("checkpoint truncated: tensor '" + name + "' declares " + std::to_string(n) +
                              " values");
        const auto* payload = in.take(n * sizeof(float), "payload");
        std::vector<float> values(n);
        std::memcpy(values.data(), payload, n * sizeof(float));
        tensors.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
    }
    if (in.remaining() != 0)
        throw FormatError("checkpoint has " + std::to_string(in.remaining()) + " trailing bytes");
    return tensors;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write to a sibling and rename so readers never see a partial file.
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!f) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_checkpoint(const NamedTensors<float>& tensors, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_checkpoint(tensors));
}

NamedTensors<float> load_checkpoint(const std::filesystem::path& path)
{
    return decode_checkpoint(read_file_bytes(path));
}

} // namespace s2s
