#!/usr/bin/env python3
# utils 包初始化文件
