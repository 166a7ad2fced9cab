#pragma once
// Little-endian binary checkpoint primitives. Raw doubles round-trip
// bit-exact, which the checkpoint contracts rely on.

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace kbc {

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write file: " + path);
    }

    void magic(const char tag[8]) { out_.write(tag, 8); }
    void u32(uint32_t v) { raw(&v, sizeof(v)); }
    void u64(uint64_t v) { raw(&v, sizeof(v)); }
    void i64(int64_t v) { raw(&v, sizeof(v)); }
    void f64(double v) { raw(&v, sizeof(v)); }

    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    template <typename Derived>
    void matrix(const Eigen::DenseBase<Derived>& m) {
        i64(m.rows());
        i64(m.cols());
        const auto& eval = m.derived().eval();
        raw(eval.data(), sizeof(typename Derived::Scalar) * static_cast<size_t>(eval.size()));
    }

private:
    void raw(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw std::runtime_error("cannot open file: " + path);
    }

    void expect_magic(const char tag[8]) {
        char got[8] = {};
        raw(got, 8);
        if (std::string(got, 8) != std::string(tag, 8)) {
            throw std::runtime_error(path_ + ": bad checkpoint magic");
        }
    }

    uint32_t u32() { return read<uint32_t>(); }
    uint64_t u64() { return read<uint64_t>(); }
    int64_t i64() { return read<int64_t>(); }
    double f64() { return read<double>(); }

    std::string str() {
        const uint64_t n = u64();
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    template <typename Matrix>
    Matrix matrix() {
        const int64_t rows = i64();
        const int64_t cols = i64();
        if (rows < 0 || cols < 0) throw std::runtime_error(path_ + ": corrupt matrix header");
        Matrix m(rows, cols);
        raw(m.data(), sizeof(typename Matrix::Scalar) * static_cast<size_t>(m.size()));
        return m;
    }

private:
    template <typename T>
    T read() {
        T v{};
        raw(&v, sizeof(v));
        return v;
    }
    void raw(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error(path_ + ": truncated checkpoint");
    }
    std::ifstream in_;
    std::string path_;
};

}  // namespace kbc
