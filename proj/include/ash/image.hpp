#pragma once

#include <cstdint>
#include <vector>

namespace ash {

/// Row-major single-channel image.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{})
        : width(w), height(h), data(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {}

    T &at(int u, int v) { return data[static_cast<size_t>(v) * static_cast<size_t>(width) + static_cast<size_t>(u)]; }
    const T &at(int u, int v) const {
        return data[static_cast<size_t>(v) * static_cast<size_t>(width) + static_cast<size_t>(u)];
    }
    bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
    int64_t pixels() const { return static_cast<int64_t>(width) * height; }
};

using DepthImage = Image<float>;

}  // namespace ash
