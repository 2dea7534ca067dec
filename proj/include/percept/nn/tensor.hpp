#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace percept::nn {

/// Allocator that default-initializes, so resize() leaves scalars
/// uninitialized. Used for buffers that are fully overwritten.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = DefaultInitAllocator<U>;
    };
    using std::allocator<T>::allocator;

    template <typename U>
    void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

/// Tag for constructing a tensor whose contents the caller overwrites.
struct Uninitialized {};
inline constexpr Uninitialized uninitialized{};

/// Dense array of rank 1..4, row-major. Rank-4 tensors are read as
/// (batch, channels, height, width); each channel is a contiguous plane.
template <typename T>
class Tensor {
public:
    static constexpr std::size_t kMaxRank = 4;

    Tensor() = default;

    explicit Tensor(std::initializer_list<std::size_t> dims, T fill = T{})
        : Tensor(std::span<const std::size_t>(dims.begin(), dims.size()), fill) {}

    explicit Tensor(std::span<const std::size_t> dims, T fill = T{}) {
        data_.assign(init_dims(dims), fill);
    }

    Tensor(std::span<const std::size_t> dims, Uninitialized) { data_.resize(init_dims(dims)); }
    Tensor(std::initializer_list<std::size_t> dims, Uninitialized)
        : Tensor(std::span<const std::size_t>(dims.begin(), dims.size()), uninitialized) {}

    std::size_t rank() const noexcept { return rank_; }
    std::span<const std::size_t> dims() const noexcept { return {dims_.data(), rank_}; }
    std::size_t dim(std::size_t i) const {
        if (i >= rank_) throw std::out_of_range("tensor dim index out of range");
        return dims_[i];
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    // Rank-4 views.
    std::size_t batch() const { return dim4(0); }
    std::size_t channels() const { return dim4(1); }
    std::size_t height() const { return dim4(2); }
    std::size_t width() const { return dim4(3); }
    std::size_t plane_size() const { return height() * width(); }

    T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data_[((n * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data_[((n * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
    }

    /// Plane of channel c of batch item n (rank 4).
    std::span<T> plane(std::size_t n, std::size_t c) {
        return std::span<T>(data_).subspan((n * dims_[1] + c) * plane_size(), plane_size());
    }
    std::span<const T> plane(std::size_t n, std::size_t c) const {
        return std::span<const T>(data_).subspan((n * dims_[1] + c) * plane_size(), plane_size());
    }

    /// All channels of batch item n (rank 4).
    std::span<T> item(std::size_t n) {
        const std::size_t len = dims_[1] * plane_size();
        return std::span<T>(data_).subspan(n * len, len);
    }
    std::span<const T> item(std::size_t n) const {
        const std::size_t len = dims_[1] * plane_size();
        return std::span<const T>(data_).subspan(n * len, len);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const noexcept {
        if (rank_ != other.rank_) return false;
        return std::equal(dims_.begin(), dims_.begin() + rank_, other.dims_.begin());
    }

    std::string shape_string() const {
        std::string s = "(";
        for (std::size_t i = 0; i < rank_; ++i) {
            if (i) s += ", ";
            s += std::to_string(dims_[i]);
        }
        return s + ")";
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(dims());
        std::transform(data_.begin(), data_.end(), out.data().begin(),
                       [](T v) { return static_cast<U>(v); });
        return out;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    std::size_t init_dims(std::span<const std::size_t> dims) {
        if (dims.empty() || dims.size() > kMaxRank)
            throw std::invalid_argument("tensor rank must be in [1, 4], got " +
                                        std::to_string(dims.size()));
        rank_ = dims.size();
        std::size_t n = 1;
        for (std::size_t i = 0; i < rank_; ++i) {
            if (dims[i] == 0) throw std::invalid_argument("tensor dims must be >= 1");
            dims_[i] = dims[i];
            n *= dims[i];
        }
        return n;
    }

    std::size_t dim4(std::size_t i) const {
        if (rank_ != 4) throw std::logic_error("tensor is not rank 4: " + shape_string());
        return dims_[i];
    }

    std::array<std::size_t, kMaxRank> dims_{};
    std::size_t rank_ = 0;
    std::vector<T, DefaultInitAllocator<T>> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Throws std::invalid_argument with `what` when the shapes differ.
template <typename T, typename U>
void require_same_shape(const Tensor<T>& a, const Tensor<U>& b, const char* what) {
    bool same = a.rank() == b.rank();
    for (std::size_t i = 0; same && i < a.rank(); ++i) same = a.dim(i) == b.dim(i);
    if (!same)
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() +
                                    " vs " + b.shape_string());
}

}  // namespace percept::nn
