#pragma once

#include <filesystem>
#include <iostream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dataset.hpp"

namespace opticnet {

struct LoadStats {
    int loaded = 0;
    int skipped = 0;
};

/// Load a class-per-directory image tree: <root>/<CLASS>/<files>. Images are
/// decoded (PNG/JPEG/TIFF, 8- or 16-bit, gray or color), replicated to 3
/// channels if gray, bilinearly resized and scaled to [0, 1]. Classes order
/// lexicographically by directory name; undecodable files are skipped with a
/// warning; a class ending up empty is an error.
template <class T>
Dataset<T> load_image_tree(const std::string& root, int target_h, int target_w,
                           LoadStats* stats = nullptr, std::ostream* warnings = &std::cerr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) {
        throw std::runtime_error("load_image_tree: '" + root + "' is not a directory");
    }
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) {
        throw std::runtime_error("load_image_tree: no class directories under " + root);
    }

    Dataset<T> ds;
    for (const auto& d : class_dirs) ds.class_names.push_back(d.filename().string());

    for (size_t k = 0; k < class_dirs.size(); ++k) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[k])) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        int loaded_here = 0;
        for (const auto& f : files) {
            cv::Mat raw = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
            if (raw.empty()) {
                if (warnings) *warnings << "warning: skipping undecodable file " << f << "\n";
                if (stats) ++stats->skipped;
                continue;
            }
            if (raw.channels() == 4) cv::cvtColor(raw, raw, cv::COLOR_BGRA2BGR);

            double scale = 1.0;
            switch (raw.depth()) {
                case CV_8U: scale = 1.0 / 255.0; break;
                case CV_16U: scale = 1.0 / 65535.0; break;
                case CV_32F: scale = 1.0; break;
                default:
                    if (warnings) *warnings << "warning: skipping unsupported depth " << f << "\n";
                    if (stats) ++stats->skipped;
                    continue;
            }
            cv::Mat scaled;
            raw.convertTo(scaled, CV_32F, scale);
            cv::Mat resized;
            cv::resize(scaled, resized, cv::Size(target_w, target_h), 0, 0, cv::INTER_LINEAR);

            Tensor<T> img(1, target_h, target_w, 3);
            const bool gray = resized.channels() == 1;
            for (int y = 0; y < target_h; ++y) {
                for (int x = 0; x < target_w; ++x) {
                    if (gray) {
                        T v = static_cast<T>(resized.at<float>(y, x));
                        img.at(0, y, x, 0) = img.at(0, y, x, 1) = img.at(0, y, x, 2) = v;
                    } else {
                        cv::Vec3f bgr = resized.at<cv::Vec3f>(y, x);
                        img.at(0, y, x, 0) = static_cast<T>(bgr[2]);
                        img.at(0, y, x, 1) = static_cast<T>(bgr[1]);
                        img.at(0, y, x, 2) = static_cast<T>(bgr[0]);
                    }
                }
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(static_cast<int>(k));
            ++loaded_here;
            if (stats) ++stats->loaded;
        }
        if (loaded_here == 0) {
            throw std::runtime_error("load_image_tree: class directory '" +
                                     class_dirs[k].filename().string() +
                                     "' has no decodable images");
        }
    }
    return ds;
}

/// Write a dataset back out as 8-bit PNGs in the class-tree layout.
template <class T>
void save_image_tree(const Dataset<T>& ds, const std::string& root) {
    namespace fs = std::filesystem;
    ds.validate();
    for (int i = 0; i < ds.size(); ++i) {
        fs::path dir = fs::path(root) / ds.class_names[ds.labels[i]];
        fs::create_directories(dir);
        const Tensor<T>& img = ds.images[i];
        cv::Mat mat(img.h(), img.w(), CV_8UC3);
        for (int y = 0; y < img.h(); ++y) {
            for (int x = 0; x < img.w(); ++x) {
                auto to_byte = [&](int c) {
                    double v = std::clamp(static_cast<double>(img.at(0, y, x, c)), 0.0, 1.0);
                    return static_cast<unsigned char>(std::lround(v * 255.0));
                };
                mat.at<cv::Vec3b>(y, x) = cv::Vec3b(to_byte(2), to_byte(1), to_byte(0));  // BGR
            }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.png", i);
        if (!cv::imwrite((dir / name).string(), mat)) {
            throw std::runtime_error("save_image_tree: cannot write " + (dir / name).string());
        }
    }
}

}  // namespace opticnet
