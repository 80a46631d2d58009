// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "strf/params.hpp"

namespace strf {

namespace {

constexpr const char* kMagic = "STRF1";

// The payload is raw little-endian float32; this implementation assumes a
// little-endian host (checked at startup of save/load).
void require_little_endian() {
    const uint16_t probe = 1;
    if (*reinterpret_cast<const unsigned char*>(&probe) != 1)
        throw std::runtime_error("checkpoint: big-endian hosts are not supported");
}

std::string read_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(std::string("checkpoint: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

int64_t parse_kv_int(const std::string& line, const std::string& key) {
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) != 0)
        throw std::runtime_error("checkpoint: expected '" + key + "', got '" + line + "'");
    return std::stoll(line.substr(prefix.size()));
}

}  // namespace

template <class Real>
void save_checkpoint(const std::string& path, Model<Real>& model, const std::string& config_text,
                     int64_t step) {
    require_little_endian();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);

    ParamRegistry<Real> registry(&model);

    // Lobe frames serialize as one [n_lobes][9] block after the parameters.
    const auto& geom = model.lightfield.geom;
    std::vector<float> lobes;
    lobes.reserve(size_t(geom.n_lobes()) * 9);
    for (int i = 0; i < geom.n_lobes(); ++i)
        for (const Vec3* v : {&geom.axis[i], &geom.tan_l[i], &geom.tan_m[i]}) {
            lobes.push_back(float(v->x));
            lobes.push_back(float(v->y));
            lobes.push_back(float(v->z));
        }

    std::ostringstream manifest;
    size_t offset = 0;
    size_t n_blocks = 0;
    for (const auto& b : registry.blocks()) {
        manifest << b.name << " " << b.shape.size();
        for (int d : b.shape) manifest << " " << d;
        manifest << " " << offset << "\n";
        offset += b.size * sizeof(float);
        ++n_blocks;
    }
    manifest << "asg/lobes 2 " << geom.n_lobes() << " 9 " << offset << "\n";
    offset += lobes.size() * sizeof(float);
    ++n_blocks;

    out << kMagic << "\n";
    out << "step = " << step << "\n";
    out.precision(17);
    out << "bounds = " << model.bounds.min.x << " " << model.bounds.min.y << " "
        << model.bounds.min.z << " " << model.bounds.max.x << " " << model.bounds.max.y << " "
        << model.bounds.max.z << "\n";
    out << "config_bytes = " << config_text.size() << "\n";
    out << config_text;
    out << "blocks = " << n_blocks << "\n";
    out << manifest.str();
    out << "payload_bytes = " << offset << "\n";

    std::vector<float> buf;
    for (const auto& b : registry.blocks()) {
        buf.resize(b.size);
        for (size_t i = 0; i < b.size; ++i) buf[i] = float(b.values[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  std::streamsize(buf.size() * sizeof(float)));
    }
    out.write(reinterpret_cast<const char*>(lobes.data()),
              std::streamsize(lobes.size() * sizeof(float)));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

template <class Real>
LoadedCheckpoint<Real> load_checkpoint(const std::string& path) {
    require_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    if (read_line(in, "magic") != kMagic)
        throw std::runtime_error("checkpoint: bad magic in " + path + " (version mismatch?)");

    LoadedCheckpoint<Real> ck;
    ck.step = parse_kv_int(read_line(in, "step"), "step");

    const std::string bounds_line = read_line(in, "bounds");
    SceneBounds bounds;
    {
        std::istringstream bs(bounds_line);
        std::string key, eq;
        if (!(bs >> key >> eq >> bounds.min.x >> bounds.min.y >> bounds.min.z >> bounds.max.x >>
              bounds.max.y >> bounds.max.z) ||
            key != "bounds")
            throw std::runtime_error("checkpoint: bad bounds line");
    }

    const int64_t config_bytes = parse_kv_int(read_line(in, "config_bytes"), "config_bytes");
    ck.config_text.resize(size_t(config_bytes));
    in.read(ck.config_text.data(), config_bytes);
    if (in.gcount() != config_bytes) throw std::runtime_error("checkpoint: truncated config");
    ck.config = parse_config(ck.config_text);

    ck.model = build_model<Real>(ck.config, bounds);
    ParamRegistry<Real> registry(&ck.model);

    const int64_t n_blocks = parse_kv_int(read_line(in, "blocks"), "blocks");
    struct BlockEntry {
        std::string name;
        std::vector<int> dims;
        size_t offset;
        size_t count;
    };
    std::vector<BlockEntry> entries;
    for (int64_t i = 0; i < n_blocks; ++i) {
        std::istringstream ls(read_line(in, "block entry"));
        BlockEntry e;
        int ndims;
        if (!(ls >> e.name >> ndims)) throw std::runtime_error("checkpoint: bad block line");
        e.dims.resize(ndims);
        e.count = 1;
        for (int d = 0; d < ndims; ++d) {
            if (!(ls >> e.dims[d])) throw std::runtime_error("checkpoint: bad block dims");
            e.count *= size_t(e.dims[d]);
        }
        if (!(ls >> e.offset)) throw std::runtime_error("checkpoint: bad block offset");
        entries.push_back(std::move(e));
    }
    const int64_t payload_bytes = parse_kv_int(read_line(in, "payload_bytes"), "payload_bytes");

    std::vector<char> payload(static_cast<size_t>(payload_bytes));
    in.read(payload.data(), payload_bytes);
    if (in.gcount() != payload_bytes) throw std::runtime_error("checkpoint: truncated payload");

    // Validate offsets: in-bounds and non-overlapping (manifest order).
    size_t expect = 0;
    for (const auto& e : entries) {
        if (e.offset != expect || e.offset + e.count * sizeof(float) > size_t(payload_bytes))
            throw std::runtime_error("checkpoint: block '" + e.name + "' offset invalid");
        expect = e.offset + e.count * sizeof(float);
    }

    for (const auto& e : entries) {
        if (e.name == "asg/lobes") continue;  // frames are rebuilt from config
        const ParamBlock<Real>* b = registry.find(e.name);
        if (!b) throw std::runtime_error("checkpoint: unknown block '" + e.name + "'");
        if (b->size != e.count)
            throw std::runtime_error("checkpoint: size mismatch for '" + e.name + "'");
        const float* src = reinterpret_cast<const float*>(payload.data() + e.offset);
        for (size_t i = 0; i < e.count; ++i) b->values[i] = Real(src[i]);
    }
    return ck;
}

Config peek_checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    if (read_line(in, "magic") != kMagic)
        throw std::runtime_error("checkpoint: bad magic in " + path + " (version mismatch?)");
    parse_kv_int(read_line(in, "step"), "step");
    read_line(in, "bounds");
    const int64_t config_bytes = parse_kv_int(read_line(in, "config_bytes"), "config_bytes");
    std::string text(size_t(config_bytes), '\0');
    in.read(text.data(), config_bytes);
    if (in.gcount() != config_bytes) throw std::runtime_error("checkpoint: truncated config");
    return parse_config(text);
}

template void save_checkpoint<float>(const std::string&, Model<float>&, const std::string&,
                                     int64_t);
template void save_checkpoint<double>(const std::string&, Model<double>&, const std::string&,
                                      int64_t);
template struct LoadedCheckpoint<float>;
template struct LoadedCheckpoint<double>;
template LoadedCheckpoint<float> load_checkpoint<float>(const std::string&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::string&);

}  // namespace strf
