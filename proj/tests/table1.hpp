#pragma once

// Published challenge leaderboard rows used as score-reproduction fixtures:
// team, model size (KB), PSNR (dB), SSIM, runtime (ms), power (W@30FPS),
// and the printed final score.
struct LeaderboardRow {
    const char* team;
    double size_kb;
    double psnr;
    double ssim;
    double runtime_ms;
    double power_w;
    double printed_final;
};

inline constexpr LeaderboardRow kLeaderboardRows[] = {
    {"MVideoSR", 17, 27.34, 0.7799, 3.05, 0.09, 90.9},
    {"ZX_VIP", 20, 27.52, 0.7872, 3.04, 0.10, 90.7},
    {"Fighter", 11, 27.34, 0.7816, 3.41, 0.20, 85.4},
    {"XJTU-MIGU SUPER", 50, 27.77, 0.7957, 3.25, 0.22, 85.1},
    {"BOE-IOT-AIBD", 40, 27.71, 0.7820, 1.97, 0.24, 84.0},
    {"GenMedia Group", 135, 28.40, 0.8105, 3.10, 0.33, 80.6},
    {"NCUT VGroup", 35, 27.46, 0.7822, 1.39, 0.40, 75.6},
    {"Mortar ICT", 75, 22.91, 0.7546, 1.76, 0.36, 70.0},
    {"RedCat AutoX", 62, 27.71, 0.7945, 7.26, 0.53, 69.5},
    {"221B", 186, 28.19, 0.8093, 10.1, 0.80, 56.8},
    {"SuperDash", 1810, 28.45, 0.8171, 26.8, 3.73, -89.3},
};

inline constexpr int kLeaderboardRowCount = 11;
