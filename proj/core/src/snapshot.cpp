#include "wildflow/snapshot.hpp"

#include <cstdio>
#include <cstring>

namespace wf {

// Write-then-rename so a failed run never leaves a truncated snapshot.
void write_snapshot(const std::string& path, const Field& f, double t) {
    const std::string tmp = path + ".tmp";
    std::FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_snapshot: cannot open " + tmp);
    const char magic[4] = {'W', 'E', 'F', '1'};
    const std::uint32_t n = std::uint32_t(f.grid.n);
    const std::uint32_t rank = std::uint32_t(components(f.rank));
    bool ok = std::fwrite(magic, 1, 4, fp) == 4 &&
              std::fwrite(&n, 4, 1, fp) == 1 &&
              std::fwrite(&rank, 4, 1, fp) == 1 &&
              std::fwrite(&t, 8, 1, fp) == 1 &&
              std::fwrite(f.a.data(), 8, f.a.size(), fp) == f.a.size();
    ok = (std::fclose(fp) == 0) && ok;
    if (!ok || std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("write_snapshot: failed writing " + path);
}

Field read_snapshot(const std::string& path, double* t_out) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("read_snapshot: cannot open " + path);
    char magic[4];
    std::uint32_t n = 0, rank = 0;
    double t = 0.0;
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "WEF1", 4) ||
        std::fread(&n, 4, 1, fp) != 1 || std::fread(&rank, 4, 1, fp) != 1 ||
        std::fread(&t, 8, 1, fp) != 1) {
        std::fclose(fp);
        throw std::runtime_error("read_snapshot: bad header in " + path);
    }
    Rank r;
    switch (rank) {
        case 1: r = Rank::scalar; break;
        case 3: r = Rank::vector3; break;
        case 6: r = Rank::sym3x3; break;
        default:
            std::fclose(fp);
            throw std::runtime_error("read_snapshot: bad rank in " + path);
    }
    Field f(GridSpec(int(n)), r);
    const bool ok = std::fread(f.a.data(), 8, f.a.size(), fp) == f.a.size();
    std::fclose(fp);
    if (!ok) throw std::runtime_error("read_snapshot: truncated " + path);
    if (t_out) *t_out = t;
    return f;
}

}  // namespace wf
